//! Property tests for the module-level invariants: type grammar round
//! trips, layout orientation, graph growth acyclicity, iteration laws,
//! pairing, and the spike codec.

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use plugboard::eval::{elaborate, run_fast_nat, run_tokens};
use plugboard::functionals::{bind_input, compose_direct, iter_unfold};
use plugboard::netgraph::{new_construction, BoardKind, Construction, GraphError, Port};
use plugboard::primitives::{prim_add, prim_const, prim_numeral, prim_succ, product, PrimitiveKind};
use plugboard::selftest::random_construction;
use plugboard::spikecodec::{decode, encode, BurstConfig, TimeMs};
use plugboard::types::{format_type, layout, parse_type, TypeExpr};

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn type_strategy() -> impl Strategy<Value = TypeExpr> {
    let leaf = Just(TypeExpr::Nat);
    leaf.prop_recursive(6, 48, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(TypeExpr::Product),
            (
                prop::collection::vec(inner.clone(), 1..3),
                prop::collection::vec(inner, 1..3)
            )
                .prop_map(|(i, o)| TypeExpr::arrow(i, o)),
        ]
    })
}

proptest! {
    #[test]
    fn type_grammar_round_trips(t in type_strategy()) {
        let text = format_type(&t);
        prop_assert_eq!(parse_type(&text).unwrap(), t);
    }

    #[test]
    fn layout_paths_unique_and_orientation_recomputable(t in type_strategy()) {
        let l = layout(&t);
        let mut seen = std::collections::BTreeSet::new();
        for leaf in &l.leaf_ports {
            prop_assert!(seen.insert(leaf.path.clone()), "duplicate {}", leaf.path);
            prop_assert_eq!(leaf.orientation, leaf.path.orientation());
        }
        let emitters = l.emitters().count();
        let receivers = l.receivers().count();
        prop_assert_eq!(emitters + receivers, t.nat_leaf_count());
    }

    #[test]
    fn spike_round_trip(
        values in prop::collection::vec(1u64..=1000, 1..6),
        isi_us in 1u64..=4000,
        extra_us in 1u64..=20_000,
        t0_us in 0u64..=10_000,
        shift_us in 0u64..=5_000,
    ) {
        let cfg = BurstConfig::new(
            TimeMs::from_micros(isi_us),
            TimeMs::from_micros(isi_us + extra_us),
        ).unwrap();
        let vals: Vec<BigUint> = values.iter().map(|&v| big(v)).collect();
        let t0 = TimeMs::from_micros(t0_us);
        let train = encode(&vals, &cfg, t0).unwrap();
        prop_assert_eq!(decode(&train, &cfg).unwrap(), vals.clone());
        prop_assert_eq!(train.len() as u64, values.iter().sum::<u64>());

        // translation equivariance
        let shifted = encode(&vals, &cfg, TimeMs::from_micros(t0_us + shift_us)).unwrap();
        for (a, b) in train.timestamps().iter().zip(shifted.timestamps()) {
            prop_assert_eq!(a.micros() + shift_us, b.micros());
        }
    }
}

/// A small endo-function pool for the iteration laws.
fn endo_pool() -> Vec<Construction> {
    vec![
        prim_succ(),
        prim_const(big(3)).unwrap(),
        bind_input(&prim_add(), 0, &prim_numeral(big(2)).unwrap()).unwrap(),
        compose_direct(&prim_succ(), &prim_succ()).unwrap(),
    ]
}

#[test]
fn iter_unfold_satisfies_the_iteration_laws() {
    for f in endo_pool() {
        let one = iter_unfold(1, &f).unwrap();
        for x in 1..=12u64 {
            assert_eq!(
                run_fast_nat(&one, &[x]).unwrap(),
                run_fast_nat(&f, &[x]).unwrap()
            );
        }
        for n in 1..=16u64 {
            let next = iter_unfold(n + 1, &f).unwrap();
            let glued = compose_direct(&f, &iter_unfold(n, &f).unwrap()).unwrap();
            for x in [1u64, 5, 12] {
                assert_eq!(
                    run_fast_nat(&next, &[x]).unwrap(),
                    run_fast_nat(&glued, &[x]).unwrap()
                );
            }
        }
    }
}

#[test]
fn product_pairs_componentwise() {
    let parts = endo_pool();
    for f in &parts {
        for g in &parts {
            let p = product(f, g).unwrap();
            for x in 1..=12u64 {
                for y in [1u64, 7, 12] {
                    let mut want = run_fast_nat(f, &[x]).unwrap();
                    want.extend(run_fast_nat(g, &[y]).unwrap());
                    assert_eq!(run_fast_nat(&p, &[x, y]).unwrap(), want);
                }
            }
        }
    }
}

#[test]
fn add_agrees_with_integer_addition() {
    let add = prim_add();
    for x in 1..=100u64 {
        for y in [1u64, 9, 50, 100] {
            assert_eq!(run_fast_nat(&add, &[x, y]).unwrap(), vec![big(x + y)]);
        }
    }
}

#[test]
fn random_growth_stays_acyclic_and_back_edges_are_rejected() {
    let mut rng = StdRng::seed_from_u64(0xDA6);
    for _ in 0..20 {
        let len = rng.random_range(2..=8usize);
        let mut c = new_construction(parse_type("N -> N").unwrap(), None);
        let unary = TypeExpr::unary();
        let mut chain = Vec::with_capacity(len);
        for _ in 0..len {
            chain.push(
                c.add_board(BoardKind::Primitive(PrimitiveKind::Succ), unary.clone())
                    .unwrap(),
            );
        }
        let path = |s: &str| s.parse::<plugboard::types::PortPath>().unwrap();
        let shell = c.shell_id();
        c.add_link(Port::new(shell, path("in.0")), Port::new(chain[0], path("in.0")))
            .unwrap();
        for w in chain.windows(2) {
            c.add_link(Port::new(w[0], path("out.0")), Port::new(w[1], path("in.0")))
                .unwrap();
            assert!(c.validate().is_empty());
        }
        // Any link from a later board back into an earlier one must be a
        // cycle (or hit an occupied port first).
        let from = rng.random_range(1..len);
        let to = rng.random_range(0..from);
        let err = c
            .add_link(
                Port::new(chain[from], path("out.0")),
                Port::new(chain[to], path("in.0")),
            )
            .unwrap_err();
        assert!(
            matches!(
                err,
                GraphError::CycleError { .. } | GraphError::PortOccupied { .. }
            ),
            "unexpected {err:?}"
        );
        assert!(c.validate().is_empty());
    }
}

#[test]
fn primitives_are_fixed_points_of_elaboration() {
    let all = vec![
        prim_succ(),
        prim_const(big(5)).unwrap(),
        plugboard::primitives::prim_proj(2, 3).unwrap(),
        prim_add(),
        prim_numeral(big(4)).unwrap(),
    ];
    for c in all {
        let circuit = elaborate(&c).unwrap();
        assert_eq!(circuit.construction().serialize(), c.serialize());
    }
}

#[test]
fn gadget_route_iteration_matches_a_plain_loop() {
    use plugboard::eval::run_fast_big;
    use plugboard::functionals::iter_graph;
    for f in endo_pool() {
        for n in 1..=6u64 {
            let gadget = iter_graph(&prim_numeral(big(n)).unwrap(), &f).unwrap();
            for x in [1u64, 4, 9] {
                let mut v = vec![big(x)];
                for _ in 0..n {
                    v = run_fast_big(&f, &v).unwrap();
                }
                assert_eq!(run_fast_big(&gadget, &[big(x)]).unwrap(), v);
            }
        }
    }
}

#[test]
fn firing_count_equals_board_count() {
    let mut rng = StdRng::seed_from_u64(0xF1E);
    for _ in 0..40 {
        let depth = rng.random_range(1..=4);
        let c = random_construction(&mut rng, depth);
        let circuit = elaborate(&c).unwrap();
        let arity = circuit
            .construction()
            .interface_type()
            .arrow_inputs()
            .len();
        let inputs: Vec<BigUint> = (0..arity).map(|_| big(rng.random_range(1..=8))).collect();
        let (_, trace) = run_tokens(&circuit, &inputs).unwrap();
        let boards = circuit.construction().board_count() - 1; // minus shell
        assert_eq!(trace.events.len(), boards);
    }
}
