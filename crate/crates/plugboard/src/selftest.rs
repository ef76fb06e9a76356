//! Differential test suites pitting the graph calculus against the
//! independent oracles, runnable from the CLI (`selftest`) and reused by
//! the acceptance tests. Each suite prints one pass/fail line.
//!
//! A `Fault` can be injected to perturb one comparison per suite; the
//! corresponding FAIL line then names the violated law (used to verify
//! that the suites actually detect mutations).

use std::fmt;

use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::eval::{agree, elaborate, run_fast_big, run_fast_nat, run_tokens};
use crate::functionals::{
    apply_many, bind_input, build_ackermann, comp_gadget, compose_at, compose_direct, copy,
    iter_graph, iter_unfold, rec_eval,
};
use crate::netgraph::{
    new_construction, BoardKind, Construction, GraphError, Port, Violation,
};
use crate::oracle::{oracle_ack1, oracle_compose, oracle_iter, oracle_rec};
use crate::primitives::{
    prim_add, prim_const, prim_numeral, prim_proj, prim_succ, product, PrimitiveKind,
};
use crate::program::load_program;
use crate::spikecodec::{decode, encode, BurstConfig, SpikeTrain, TimeMs};
use crate::types::{parse_type, TypeExpr};

/// Deliberate perturbations for mutation checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    Recursor,
    Iteration,
    Composition,
    Ackermann,
    Differential,
    SpikeCodec,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{}: {} ({})", self.name, verdict, self.detail)
    }
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn bigs(ns: &[u64]) -> Vec<BigUint> {
    ns.iter().map(|&n| BigUint::from(n)).collect()
}

fn outcome(name: &'static str, result: Result<String, String>) -> SuiteOutcome {
    match result {
        Ok(detail) => SuiteOutcome {
            name,
            passed: true,
            detail,
        },
        Err(detail) => SuiteOutcome {
            name,
            passed: false,
            detail,
        },
    }
}

/// One unary building block, realized both as a circuit and as a plain
/// integer map. The two readings never share code.
#[derive(Clone, Copy, Debug)]
enum UnaryOp {
    Succ,
    Const(u64),
    AddK(u64),
}

impl UnaryOp {
    fn random(rng: &mut StdRng) -> UnaryOp {
        match rng.random_range(0..3) {
            0 => UnaryOp::Succ,
            1 => UnaryOp::Const(rng.random_range(1..=5)),
            _ => UnaryOp::AddK(rng.random_range(1..=4)),
        }
    }

    fn circuit(self) -> Construction {
        match self {
            UnaryOp::Succ => prim_succ(),
            UnaryOp::Const(k) => prim_const(big(k)).expect("k >= 1"),
            UnaryOp::AddK(k) => {
                bind_input(&prim_add(), 0, &prim_numeral(big(k)).expect("k >= 1"))
                    .expect("add is binary")
            }
        }
    }

    fn apply(self, x: u64) -> u64 {
        match self {
            UnaryOp::Succ => x + 1,
            UnaryOp::Const(k) => k,
            UnaryOp::AddK(k) => x + k,
        }
    }
}

/// A pipeline of unary blocks, the pool for composition and iteration
/// checks.
#[derive(Clone, Debug)]
struct UnaryChain(Vec<UnaryOp>);

impl UnaryChain {
    fn random(rng: &mut StdRng, max_len: usize) -> UnaryChain {
        let len = rng.random_range(1..=max_len);
        UnaryChain((0..len).map(|_| UnaryOp::random(rng)).collect())
    }

    fn circuit(&self) -> Construction {
        let mut c = self.0[0].circuit();
        for op in &self.0[1..] {
            c = compose_direct(&c, &op.circuit()).expect("unary chain");
        }
        c
    }

    fn apply(&self, x: u64) -> u64 {
        self.0.iter().fold(x, |v, op| op.apply(v))
    }
}

/// Stage families for the recursor pool: the stage may depend on its index.
#[derive(Clone, Debug)]
enum StageSpec {
    AddIndex,
    AddConst(u64),
    ConstIndex,
    Chain(UnaryChain),
}

impl StageSpec {
    fn random(rng: &mut StdRng) -> StageSpec {
        match rng.random_range(0..4) {
            0 => StageSpec::AddIndex,
            1 => StageSpec::AddConst(rng.random_range(1..=4)),
            2 => StageSpec::ConstIndex,
            _ => StageSpec::Chain(UnaryChain::random(rng, 3)),
        }
    }

    fn circuit(&self, j: u64) -> Construction {
        match self {
            StageSpec::AddIndex => {
                bind_input(&prim_add(), 0, &prim_numeral(big(j)).expect("j >= 1"))
                    .expect("add is binary")
            }
            StageSpec::AddConst(k) => UnaryOp::AddK(*k).circuit(),
            StageSpec::ConstIndex => UnaryOp::Const(j).circuit(),
            StageSpec::Chain(chain) => chain.circuit(),
        }
    }

    fn apply(&self, j: u64, x: u64) -> u64 {
        match self {
            StageSpec::AddIndex => x + j,
            StageSpec::AddConst(k) => x + k,
            StageSpec::ConstIndex => j,
            StageSpec::Chain(chain) => chain.apply(x),
        }
    }
}

/// Recursor equations against the direct-recursion oracle.
pub fn recursor_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        let bump = u64::from(fault);
        for case in 0..100u64 {
            let a = rng.random_range(1..=9u64);
            let spec = StageSpec::random(&mut rng);
            let base = prim_numeral(big(a)).expect("a >= 1");
            for k in 1..=10u64 {
                let got = rec_eval(&base, |j| Ok(spec.circuit(j)), k)
                    .map_err(|e| format!("rec_eval failed: {e}"))?;
                let want = oracle_rec(a, &|j, x| spec.apply(j, x), k)
                    + if case == 0 && k == 10 { bump } else { 0 };
                if got != bigs(&[want]) {
                    return Err(format!(
                        "case {case} k={k}: rec_eval={} oracle={want}",
                        got[0]
                    ));
                }
                if k == 1 && got != bigs(&[a]) {
                    return Err(format!("base case violated: rec(a, c, 1) = {}", got[0]));
                }
            }
        }
        Ok("k<=10, 100 randomized (a, c) pairs, exact".to_string())
    };
    outcome("recursor equations", run())
}

/// Iteration against the loop oracle, plus the unfolded chain's shape.
pub fn iteration_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(0x5eed_0002);
        let bump = u64::from(fault);
        for case in 0..30u64 {
            let chain = UnaryChain::random(&mut rng, 2);
            let f = chain.circuit();
            for n in 1..=16u64 {
                let unfolded =
                    iter_unfold(n, &f).map_err(|e| format!("iter_unfold failed: {e}"))?;
                for x in 1..=12u64 {
                    let got = run_fast_nat(&unfolded, &[x])
                        .map_err(|e| format!("eval failed: {e}"))?;
                    let want = oracle_iter(n, |v| chain.apply(v))(x)
                        + if case == 0 && n == 16 && x == 12 { bump } else { 0 };
                    if got != bigs(&[want]) {
                        return Err(format!(
                            "case {case} n={n} x={x}: chain={} oracle={want}",
                            got[0]
                        ));
                    }
                }
            }
        }
        let four = iter_unfold(4, &prim_succ()).expect("unfold");
        let instances = four.boards().filter(|b| b.id != four.shell_id()).count();
        let joints = four
            .links()
            .filter(|l| l.from.board != four.shell_id() && l.to.board != four.shell_id())
            .count();
        if instances != 4 || joints != 3 {
            return Err(format!(
                "iter_unfold(4, succ) shape: {instances} instances, {joints} joints"
            ));
        }
        Ok("n<=16, inputs 1..12, and the n=4 chain has 4 instances, 3 joints".to_string())
    };
    outcome("iteration law", run())
}

/// Composition order and the comp-gadget/direct-composition equivalence.
pub fn composition_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(0x5eed_0003);
        let bump = u64::from(fault);
        let gadget = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        for case in 0..100u64 {
            let (cf, cg) = (
                UnaryChain::random(&mut rng, 2),
                UnaryChain::random(&mut rng, 2),
            );
            let f = cf.circuit();
            let g = cg.circuit();
            let composed = compose_direct(&f, &g).map_err(|e| format!("compose: {e}"))?;
            let applied = apply_many(&gadget.construction, &[&f, &g])
                .map_err(|e| format!("apply comp: {e}"))?;
            for x in 1..=12u64 {
                let direct = run_fast_nat(&composed, &[x]).map_err(|e| e.to_string())?;
                let want = oracle_compose(|v| cf.apply(v), |v| cg.apply(v))(x)
                    + if case == 0 && x == 12 { bump } else { 0 };
                if direct != bigs(&[want]) {
                    return Err(format!(
                        "case {case} x={x}: compose={} oracle g(f(x))={want}",
                        direct[0]
                    ));
                }
                let via_gadget = run_fast_nat(&applied, &[x]).map_err(|e| e.to_string())?;
                if via_gadget != direct {
                    return Err(format!(
                        "case {case} x={x}: comp gadget {} != direct {}",
                        via_gadget[0], direct[0]
                    ));
                }
            }
        }
        // The (N;N) family: pairs of unary blocks side by side.
        let pair = TypeExpr::Product(vec![TypeExpr::Nat, TypeExpr::Nat]);
        let gadget2 = comp_gadget(pair.clone(), pair.clone(), pair);
        for _ in 0..10 {
            let mk = |rng: &mut StdRng| -> (Construction, UnaryOp, UnaryOp) {
                let (l, r) = (UnaryOp::random(rng), UnaryOp::random(rng));
                (
                    product(&l.circuit(), &r.circuit()).expect("product"),
                    l,
                    r,
                )
            };
            let (f, fl, fr) = mk(&mut rng);
            let (g, gl, gr) = mk(&mut rng);
            let composed = compose_direct(&f, &g).map_err(|e| e.to_string())?;
            let applied = apply_many(&gadget2.construction, &[&f, &g])
                .map_err(|e| format!("apply comp pair: {e}"))?;
            for (x, y) in [(1u64, 2u64), (5, 3), (12, 7)] {
                let want = bigs(&[gl.apply(fl.apply(x)), gr.apply(fr.apply(y))]);
                let direct = run_fast_nat(&composed, &[x, y]).map_err(|e| e.to_string())?;
                let via = run_fast_nat(&applied, &[x, y]).map_err(|e| e.to_string())?;
                if direct != want || via != want {
                    return Err(format!("pair family mismatch at ({x},{y})"));
                }
            }
        }
        Ok("100 unary pairs + (N;N) family, inputs 1..12, exact".to_string())
    };
    outcome("composition law", run())
}

/// The recursor-built shifted Ackermann against the standard oracle.
pub fn ackermann_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let ack = build_ackermann();
        let bump = u64::from(fault);
        for m in 1..=4u64 {
            for n in 1..=6u64 {
                let got = run_fast_nat(&ack, &[m, n]).map_err(|e| e.to_string())?;
                let want = oracle_ack1(m, n).map_err(|e| e.to_string())?
                    + if m == 4 && n == 6 { bump } else { 0 };
                if got != bigs(&[want]) {
                    return Err(format!("ack1({m},{n}) = {} but oracle says {want}", got[0]));
                }
            }
        }
        Ok("1<=m<=4, 1<=n<=6 against the shifted standard oracle".to_string())
    };
    outcome("ackermann", run())
}

/// A random complete first-order construction of bounded depth. All ports
/// are naturals, so well-typedness reduces to arity bookkeeping.
pub fn random_construction(rng: &mut StdRng, depth: usize) -> Construction {
    if depth == 0 {
        return match rng.random_range(0..4) {
            0 => prim_succ(),
            1 => prim_const(big(rng.random_range(1..=5))).expect("k >= 1"),
            2 => prim_add(),
            _ => {
                let arity = rng.random_range(1..=3);
                let index = rng.random_range(1..=arity);
                prim_proj(index, arity).expect("index in range")
            }
        };
    }
    let a = random_construction(rng, depth - 1);
    match rng.random_range(0..5) {
        0 => {
            let b = random_construction(rng, depth - 1);
            if a.interface_type().arrow_outputs().len() == b.interface_type().arrow_inputs().len()
            {
                compose_direct(&a, &b).expect("arity-matched compose")
            } else {
                product(&a, &b).expect("product")
            }
        }
        1 => {
            let b = random_construction(rng, depth - 1);
            if a.interface_type().arrow_inputs().len() + b.interface_type().arrow_inputs().len()
                <= 4
            {
                product(&a, &b).expect("product")
            } else {
                a
            }
        }
        2 => {
            let b = random_construction(rng, depth - 1);
            let plugs = a.interface_type().arrow_outputs().len();
            let sockets = b.interface_type().arrow_inputs().len();
            if sockets == 0 {
                return a;
            }
            let i = rng.random_range(0..plugs);
            let j = rng.random_range(0..sockets);
            compose_at(&a, i, &b, j).expect("nat ports always match")
        }
        3 => {
            if a.interface_type().arrow_inputs() == a.interface_type().arrow_outputs() {
                let n = rng.random_range(1..=4u64);
                iter_graph(&prim_numeral(big(n)).expect("n >= 1"), &a).expect("endo")
            } else {
                a
            }
        }
        _ => {
            let sockets = a.interface_type().arrow_inputs().len();
            if sockets > 1 {
                let i = rng.random_range(0..sockets);
                let k = rng.random_range(1..=8u64);
                bind_input(&a, i, &prim_numeral(big(k)).expect("k >= 1")).expect("nat socket")
            } else {
                a
            }
        }
    }
}

/// Token semantics against the fast evaluator on random programs.
pub fn differential_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(0x5eed_0004);
        let mut checked = 0usize;
        for case in 0..200usize {
            let depth = rng.random_range(1..=5);
            let c = random_construction(&mut rng, depth);
            let arity = c.interface_type().arrow_inputs().len();
            let inputs: Vec<BigUint> =
                (0..arity).map(|_| big(rng.random_range(1..=8))).collect();
            if fault && case == 0 {
                // Perturbed comparison: fast result vs tokens shifted by one.
                let fast = run_fast_big(&c, &inputs).map_err(|e| e.to_string())?;
                let (mut tokens, _) = run_tokens(&elaborate(&c).map_err(|e| e.to_string())?, &inputs)
                    .map_err(|e| e.to_string())?;
                if let Some(v) = tokens.first_mut() {
                    *v += 1u32;
                }
                if fast != tokens {
                    return Err(format!("case {case}: run_tokens != run_fast"));
                }
            } else if !agree(&c, &inputs).map_err(|e| format!("case {case}: {e}"))? {
                return Err(format!("case {case}: run_tokens != run_fast"));
            }
            checked += 1;
        }
        Ok(format!("{checked} random programs, depth <= 5, inputs <= 8"))
    };
    outcome("differential semantics", run())
}

/// Spike codec round trip and the malformed-train rejection.
pub fn spike_suite(fault: bool) -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(0x5eed_0005);
        for case in 0..1000usize {
            let isi = TimeMs::from_micros(rng.random_range(1..=4000));
            let gap = TimeMs::from_micros(isi.micros() + rng.random_range(1..=20_000));
            let cfg = BurstConfig::new(isi, gap).map_err(|e| e.to_string())?;
            let len = rng.random_range(1..=6);
            let mut values: Vec<BigUint> =
                (0..len).map(|_| big(rng.random_range(1..=1000))).collect();
            let t0 = TimeMs::from_micros(rng.random_range(0..=10_000));
            let train = encode(&values, &cfg, t0).map_err(|e| e.to_string())?;
            if fault && case == 0 {
                values[0] += 1u32;
            }
            let back = decode(&train, &cfg).map_err(|e| e.to_string())?;
            if back != values {
                return Err(format!("case {case}: decode(encode(vs)) != vs"));
            }
        }
        let cfg = BurstConfig::new(TimeMs::from_ms(2), TimeMs::from_ms(10))
            .map_err(|e| e.to_string())?;
        let crafted = SpikeTrain::from_timestamps(vec![TimeMs::from_ms(0), TimeMs::from_ms(5)])
            .map_err(|e| e.to_string())?;
        match decode(&crafted, &cfg) {
            Err(crate::spikecodec::CodecError::AmbiguousSpacing { .. }) => {}
            other => return Err(format!("crafted train decoded as {other:?}")),
        }
        Ok("1000 random lists (values <= 1000) plus crafted ambiguous train".to_string())
    };
    outcome("spike codec round trip", run())
}

/// The negative corpus: every invalid wiring yields its specific error
/// class, never a generic failure.
pub fn validator_suite() -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let mut count = 0usize;
        let unary = parse_type("N -> N").expect("type");
        let fresh = || {
            let mut c = new_construction(unary.clone(), None);
            let f = c
                .add_board(BoardKind::Primitive(PrimitiveKind::Succ), unary.clone())
                .expect("succ");
            let g = c
                .add_board(BoardKind::Primitive(PrimitiveKind::Succ), unary.clone())
                .expect("succ");
            (c, f, g)
        };
        let path = |s: &str| s.parse::<crate::types::PortPath>().expect("path");

        // socket -> socket
        let (mut c, f, g) = fresh();
        match c.add_link(Port::new(f, path("in.0")), Port::new(g, path("in.0"))) {
            Err(GraphError::OrientationError { .. }) => count += 1,
            other => return Err(format!("socket->socket gave {other:?}")),
        }
        // plug -> plug
        let (mut c, f, g) = fresh();
        match c.add_link(Port::new(f, path("out.0")), Port::new(g, path("out.0"))) {
            Err(GraphError::OrientationError { .. }) => count += 1,
            other => return Err(format!("plug->plug gave {other:?}")),
        }
        // receiver fed twice
        let (mut c, f, g) = fresh();
        let shell = c.shell_id();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .map_err(|e| e.to_string())?;
        match c.add_link(Port::new(shell, path("in.0")), Port::new(g, path("in.0"))) {
            Err(GraphError::PortOccupied { .. }) => count += 1,
            other => return Err(format!("double feed gave {other:?}")),
        }
        // emitter used twice
        let (mut c, f, g) = fresh();
        let shell = c.shell_id();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .map_err(|e| e.to_string())?;
        match c.add_link(Port::new(f, path("out.0")), Port::new(shell, path("out.0"))) {
            Err(GraphError::PortOccupied { .. }) => count += 1,
            other => return Err(format!("double use gave {other:?}")),
        }
        // two-board cycle
        let (mut c, f, g) = fresh();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .map_err(|e| e.to_string())?;
        match c.add_link(Port::new(g, path("out.0")), Port::new(f, path("in.0"))) {
            Err(GraphError::CycleError { .. }) => count += 1,
            other => return Err(format!("cycle gave {other:?}")),
        }
        // link at a compound (non-leaf) endpoint
        let hi = parse_type("(N -> N) -> N").expect("type");
        let mut c = new_construction(hi, None);
        let f = c
            .add_board(BoardKind::Primitive(PrimitiveKind::Succ), unary.clone())
            .expect("succ");
        let shell = c.shell_id();
        match c.add_link(Port::new(f, path("out.0")), Port::new(shell, path("in.0"))) {
            Err(GraphError::TypeMismatch { .. }) => count += 1,
            other => return Err(format!("compound endpoint gave {other:?}")),
        }
        // unknown board
        let (mut c, f, _) = fresh();
        let ghost = crate::netgraph::BoardId::fresh();
        match c.add_link(Port::new(f, path("out.0")), Port::new(ghost, path("in.0"))) {
            Err(GraphError::UnknownBoard(_)) => count += 1,
            other => return Err(format!("unknown board gave {other:?}")),
        }
        // validator reports on crafted graphs
        let (mut c, f, g) = fresh();
        let shell = c.shell_id();
        c.add_link_unchecked(Port::new(f, path("out.0")), Port::new(g, path("in.0")));
        c.add_link_unchecked(Port::new(shell, path("in.0")), Port::new(g, path("in.0")));
        if !c
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::FanIn { .. }))
        {
            return Err("crafted fan-in not reported".to_string());
        }
        count += 1;
        let (mut c, f, g) = fresh();
        c.add_link_unchecked(Port::new(f, path("out.0")), Port::new(g, path("in.0")));
        c.add_link_unchecked(Port::new(g, path("out.0")), Port::new(f, path("in.0")));
        if !c
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::Cycle { .. }))
        {
            return Err("crafted cycle not reported".to_string());
        }
        count += 1;
        Ok(format!("{count}/9 negative cases hit their exact error class"))
    };
    outcome("validator corpus", run())
}

fn corpus() -> Vec<(&'static str, Construction)> {
    let h = load_program("(define main (compose (copy succ) add))")
        .expect("h program")
        .main()
        .expect("main")
        .clone();
    let iter4 = load_program("(define main (iter (numeral 4) succ))")
        .expect("iter program")
        .main()
        .expect("main")
        .clone();
    let rec4 = load_program("(define main (rec N (numeral 1) add (numeral 4)))")
        .expect("rec program")
        .main()
        .expect("main")
        .clone();
    vec![
        ("succ", prim_succ()),
        ("add", prim_add()),
        ("const3", prim_const(big(3)).expect("k")),
        ("proj23", prim_proj(2, 3).expect("range")),
        ("numeral4", prim_numeral(big(4)).expect("k")),
        ("pair", product(&prim_succ(), &prim_succ()).expect("product")),
        (
            "succ2",
            compose_direct(&prim_succ(), &prim_succ()).expect("compose"),
        ),
        ("copy", copy(&prim_succ()).1),
        (
            "comp",
            comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat).construction,
        ),
        ("h", h),
        ("iter4", iter4),
        (
            "iter4-unfolded",
            iter_unfold(4, &prim_succ()).expect("unfold"),
        ),
        ("rec4", rec4),
        ("ackermann", build_ackermann()),
    ]
}

/// Canonical serialization round trip over the built-in corpus.
pub fn serialization_suite() -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let corpus = corpus();
        for (name, c) in &corpus {
            let text = c.serialize();
            let back = Construction::deserialize(&text)
                .map_err(|e| format!("{name}: deserialize failed: {e}"))?;
            if !back.validate().is_empty() {
                return Err(format!("{name}: deserialized form does not validate"));
            }
            let again = back.serialize();
            if again != text {
                return Err(format!("{name}: canonical round trip not byte-identical"));
            }
        }
        Ok(format!("{} corpus graphs, byte-identical", corpus.len()))
    };
    outcome("serialization round trip", run())
}

/// The worked example: h(x, y) = f(x) + g(y) with f = g = succ.
pub fn h_example_suite() -> SuiteOutcome {
    let run = || -> Result<String, String> {
        let text = "(define main (compose (copy succ) add))";
        let h = load_program(text)
            .map_err(|e| e.to_string())?
            .main()
            .map_err(|e| e.to_string())?
            .clone();
        let fast = run_fast_nat(&h, &[3, 4]).map_err(|e| e.to_string())?;
        let (tokens, _) =
            run_tokens(&elaborate(&h).map_err(|e| e.to_string())?, &bigs(&[3, 4]))
                .map_err(|e| e.to_string())?;
        if fast != bigs(&[9]) || tokens != bigs(&[9]) {
            return Err(format!("h(3,4) gave fast={fast:?} tokens={tokens:?}"));
        }
        let dot1 = h.to_dot();
        let h2 = load_program(text)
            .map_err(|e| e.to_string())?
            .main()
            .map_err(|e| e.to_string())?
            .clone();
        if h2.to_dot() != dot1 {
            return Err("DOT export differs between identical builds".to_string());
        }
        Ok("h(3,4) = 9 under both semantics; DOT export deterministic".to_string())
    };
    outcome("h example", run())
}

/// Runs every suite; `fault` perturbs one comparison in the named suite.
pub fn run_all(fault: Option<Fault>) -> Vec<SuiteOutcome> {
    let is = |f: Fault| fault == Some(f);
    vec![
        recursor_suite(is(Fault::Recursor)),
        iteration_suite(is(Fault::Iteration)),
        composition_suite(is(Fault::Composition)),
        ackermann_suite(is(Fault::Ackermann)),
        differential_suite(is(Fault::Differential)),
        spike_suite(is(Fault::SpikeCodec)),
        validator_suite(),
        serialization_suite(),
        h_example_suite(),
    ]
}

/// Full report text plus overall success.
pub fn render_report(results: &[SuiteOutcome]) -> (String, bool) {
    let mut out = String::new();
    let mut ok = true;
    for r in results {
        out.push_str(&r.to_string());
        out.push('\n');
        ok &= r.passed;
    }
    let (passed, total) = (results.iter().filter(|r| r.passed).count(), results.len());
    out.push_str(&format!("{passed}/{total} suites passed\n"));
    (out, ok)
}
