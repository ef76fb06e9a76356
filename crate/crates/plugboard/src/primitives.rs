//! The basic function inventory as ready-made one-board constructions:
//! successor, constants, projections, addition, numeral sources, and the
//! side-by-side product of two constructions.

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::netgraph::{new_construction, Assembler, BoardKind, Construction, GraphError, Port};
use crate::types::{PortPath, Selector, TypeExpr};

/// Kinds of primitive first-order boards. Constants take one dummy `N`
/// input so that numeral sources stay the only nullary boards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimitiveKind {
    Succ,
    ConstK(BigUint),
    Proj { index: usize, arity: usize },
    Add,
}

impl PrimitiveKind {
    /// Name used in programs and serialized graphs: `succ`, `const:<k>`,
    /// `proj:<i>:<k>`, `add`.
    pub fn name(&self) -> String {
        match self {
            PrimitiveKind::Succ => "succ".to_string(),
            PrimitiveKind::ConstK(k) => format!("const:{k}"),
            PrimitiveKind::Proj { index, arity } => format!("proj:{index}:{arity}"),
            PrimitiveKind::Add => "add".to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<PrimitiveKind> {
        match s {
            "succ" => Some(PrimitiveKind::Succ),
            "add" => Some(PrimitiveKind::Add),
            _ => {
                if let Some(k) = s.strip_prefix("const:") {
                    let k: BigUint = k.parse().ok()?;
                    if k.is_zero() {
                        return None;
                    }
                    return Some(PrimitiveKind::ConstK(k));
                }
                if let Some(rest) = s.strip_prefix("proj:") {
                    let (i, k) = rest.split_once(':')?;
                    let index = i.parse().ok()?;
                    let arity = k.parse().ok()?;
                    if index < 1 || index > arity {
                        return None;
                    }
                    return Some(PrimitiveKind::Proj { index, arity });
                }
                None
            }
        }
    }

    pub fn board_type(&self) -> TypeExpr {
        match self {
            PrimitiveKind::Succ | PrimitiveKind::ConstK(_) => TypeExpr::unary(),
            PrimitiveKind::Proj { arity, .. } => {
                TypeExpr::arrow(vec![TypeExpr::Nat; *arity], vec![TypeExpr::Nat])
            }
            PrimitiveKind::Add => {
                TypeExpr::arrow(vec![TypeExpr::Nat, TypeExpr::Nat], vec![TypeExpr::Nat])
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PrimitiveError {
    #[error("numerals start at 1; 0 is not a value")]
    ZeroValue,
    #[error("projection index {index} out of range 1..={arity}")]
    ProjRange { index: usize, arity: usize },
}

/// Wraps a single primitive board in a construction of the same type, with
/// the shell wired straight through.
fn single_board(kind: BoardKind, name: &str) -> Construction {
    let ty = kind
        .expected_type()
        .expect("primitive kinds determine their type");
    let mut c = new_construction(ty.clone(), Some(name));
    let board = c.add_board(kind, ty).expect("kind/type agree");
    let shell = c.shell_id();
    for leaf in c.interface_layout().leaf_ports.clone() {
        let (from, to) = match leaf.path.head().map(|s| s.side) {
            Some(crate::types::Side::Input) => (
                Port::new(shell, leaf.path.clone()),
                Port::new(board, leaf.path.clone()),
            ),
            _ => (
                Port::new(board, leaf.path.clone()),
                Port::new(shell, leaf.path.clone()),
            ),
        };
        c.add_link(from, to).expect("pass-through wiring");
    }
    c
}

/// The successor function, `N -> N`.
pub fn prim_succ() -> Construction {
    single_board(BoardKind::Primitive(PrimitiveKind::Succ), "succ")
}

/// The constant function with value `k`, `N -> N` (input ignored).
pub fn prim_const(k: BigUint) -> Result<Construction, PrimitiveError> {
    if k.is_zero() {
        return Err(PrimitiveError::ZeroValue);
    }
    let name = format!("const:{k}");
    Ok(single_board(
        BoardKind::Primitive(PrimitiveKind::ConstK(k)),
        &name,
    ))
}

/// The projection emitting the `index`-th of `arity` sockets (1-based).
pub fn prim_proj(index: usize, arity: usize) -> Result<Construction, PrimitiveError> {
    if index < 1 || index > arity {
        return Err(PrimitiveError::ProjRange { index, arity });
    }
    let name = format!("proj:{index}:{arity}");
    Ok(single_board(
        BoardKind::Primitive(PrimitiveKind::Proj { index, arity }),
        &name,
    ))
}

/// Arithmetic sum, `(N;N) -> N`.
pub fn prim_add() -> Construction {
    single_board(BoardKind::Primitive(PrimitiveKind::Add), "add")
}

/// A nullary source emitting the numeral `k`, `() -> N`.
pub fn prim_numeral(k: BigUint) -> Result<Construction, PrimitiveError> {
    if k.is_zero() {
        return Err(PrimitiveError::ZeroValue);
    }
    let name = format!("numeral:{k}");
    let mut c = new_construction(TypeExpr::numeral_source(), Some(&name));
    let board = c
        .add_board(BoardKind::Numeral(k), TypeExpr::numeral_source())
        .expect("numeral type");
    let shell = c.shell_id();
    c.add_link(
        Port::new(board, PortPath(vec![Selector::output(0)])),
        Port::new(shell, PortPath(vec![Selector::output(0)])),
    )
    .expect("pass-through wiring");
    Ok(c)
}

/// Side-by-side placement: `product(f: A -> B, g: C -> D)` has type
/// `(A;C) -> (B;D)` with the shell faces concatenated.
pub fn product(f: &Construction, g: &Construction) -> Result<Construction, GraphError> {
    let f_ins = f.interface_type().arrow_inputs().to_vec();
    let g_ins = g.interface_type().arrow_inputs().to_vec();
    let f_outs = f.interface_type().arrow_outputs().to_vec();
    let g_outs = g.interface_type().arrow_outputs().to_vec();
    let interface = TypeExpr::arrow(
        f_ins.iter().chain(&g_ins).cloned().collect(),
        f_outs.iter().chain(&g_outs).cloned().collect(),
    );
    let mut asm = Assembler::new(interface, None);
    let pf = asm.embed(f)?;
    let pg = asm.embed(g)?;
    for path in f.input_leaves().into_iter().chain(f.output_leaves()) {
        let shell_side = asm.shell_node(path.clone());
        let part_side = asm.boundary(pf, path);
        asm.alias(shell_side, part_side);
    }
    for path in g.input_leaves() {
        let shell_side = asm.shell_node(path.with_head_offset(f_ins.len()));
        asm.alias(shell_side, asm.boundary(pg, path));
    }
    for path in g.output_leaves() {
        let shell_side = asm.shell_node(path.with_head_offset(f_outs.len()));
        asm.alias(shell_side, asm.boundary(pg, path));
    }
    asm.finish()
}
