//! The second-order layer: application, the composition gadget, copy,
//! iteration, and the higher-order primitive recursion iterator, each
//! realized as a graph construction or a meta-level construction
//! transformer.
//!
//! Application discharges a compound socket by linking the socket's
//! argument face to the argument construction's sockets and the argument's
//! plugs back to the socket's result face; composition is the special case
//! where the wiring gadget has no boards of its own. Iteration and the
//! recursor consume a concrete numeral and unfold into finite chains.

use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::eval::{run_fast_big, EvalError};
use crate::netgraph::{
    new_construction, Assembler, BoardKind, Construction, GraphError, Port,
};
use crate::primitives::{prim_numeral, prim_succ};
use crate::types::{
    format_type, layout, port_list, PortPath, Selector, Side, TypeExpr,
};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("socket {index} is first-order; apply discharges compound sockets")]
    SlotNotCompound { index: usize },
    #[error("no compound socket left to discharge")]
    NoCompoundSocket,
    #[error("{what} index {index} out of range (limit {limit})")]
    PortRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("count must be a numeral >= 1")]
    CountOutOfRange,
    #[error("count too large to unfold: {0}")]
    CountTooLarge(BigUint),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(Box<EvalError>),
}

impl From<EvalError> for FunctionalError {
    fn from(e: EvalError) -> Self {
        FunctionalError::Eval(Box::new(e))
    }
}

fn type_mismatch(context: &str, expected: &TypeExpr, found: &TypeExpr) -> FunctionalError {
    FunctionalError::TypeMismatch {
        context: context.to_string(),
        expected: format_type(expected),
        found: format_type(found),
    }
}

/// A second-order construction together with the concrete types its family
/// was instantiated at.
#[derive(Clone, Debug)]
pub struct FunctionalGadget {
    pub construction: Construction,
    pub family: GadgetFamily,
}

#[derive(Clone, Debug)]
pub enum GadgetFamily {
    Comp {
        a: TypeExpr,
        b: TypeExpr,
        c: TypeExpr,
    },
    Iter {
        item: TypeExpr,
    },
}

/// Leaf paths under the `index`-th element of an arrow side, in canonical
/// order.
fn element_leaves(element: &TypeExpr, side: Side, index: usize) -> Vec<PortPath> {
    layout(element)
        .leaf_ports
        .into_iter()
        .map(|leaf| leaf.path.prefixed(Selector { side, index }))
        .collect()
}

/// Leaf paths of a whole arrow side.
fn side_leaves(elements: &[TypeExpr], side: Side) -> Vec<PortPath> {
    elements
        .iter()
        .enumerate()
        .flat_map(|(i, t)| element_leaves(t, side, i))
        .collect()
}

/// Direct composition `x -> g(f(x))`: disjoint copies of `f` and `g` with
/// each plug of `f` linked to the matching socket of `g`.
pub fn compose_direct(
    f: &Construction,
    g: &Construction,
) -> Result<Construction, FunctionalError> {
    let f_outs = f.interface_type().arrow_outputs().to_vec();
    let g_ins = g.interface_type().arrow_inputs().to_vec();
    if f_outs != g_ins {
        return Err(type_mismatch(
            "compose",
            &TypeExpr::arrow(f_outs, vec![TypeExpr::Nat]),
            g.interface_type(),
        ));
    }
    let interface = TypeExpr::arrow(
        f.interface_type().arrow_inputs().to_vec(),
        g.interface_type().arrow_outputs().to_vec(),
    );
    let mut asm = Assembler::new(interface, None);
    let pf = asm.embed(f)?;
    let pg = asm.embed(g)?;
    for path in f.input_leaves() {
        asm.alias(asm.shell_node(path.clone()), asm.boundary(pf, path));
    }
    for (out_path, in_path) in f.output_leaves().into_iter().zip(g.input_leaves()) {
        asm.alias(asm.boundary(pf, out_path), asm.boundary(pg, in_path));
    }
    for path in g.output_leaves() {
        asm.alias(asm.boundary(pg, path.clone()), asm.shell_node(path));
    }
    Ok(asm.finish()?)
}

/// Meta-composition on chosen ports: one link from `f`'s plug `plug_index`
/// to `g`'s socket `socket_index`; the interface keeps the remaining
/// sockets (f's first, then g's) and remaining plugs.
pub fn compose_at(
    f: &Construction,
    plug_index: usize,
    g: &Construction,
    socket_index: usize,
) -> Result<Construction, FunctionalError> {
    for (name, c) in [("first", f), ("second", g)] {
        if !c.interface_type().is_first_order() {
            return Err(FunctionalError::TypeMismatch {
                context: format!("compose-at {name} argument"),
                expected: "a first-order function".to_string(),
                found: format_type(c.interface_type()),
            });
        }
    }
    let f_outs = f.interface_type().arrow_outputs().to_vec();
    let g_ins = g.interface_type().arrow_inputs().to_vec();
    if plug_index >= f_outs.len() {
        return Err(FunctionalError::PortRange {
            what: "plug",
            index: plug_index,
            limit: f_outs.len(),
        });
    }
    if socket_index >= g_ins.len() {
        return Err(FunctionalError::PortRange {
            what: "socket",
            index: socket_index,
            limit: g_ins.len(),
        });
    }
    if f_outs[plug_index] != g_ins[socket_index] || f_outs[plug_index] != TypeExpr::Nat {
        return Err(type_mismatch(
            "compose-at port",
            &TypeExpr::Nat,
            &f_outs[plug_index],
        ));
    }
    let f_ins = f.interface_type().arrow_inputs().to_vec();
    let g_outs = g.interface_type().arrow_outputs().to_vec();
    let ins: Vec<TypeExpr> = f_ins
        .iter()
        .cloned()
        .chain(
            g_ins
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != socket_index)
                .map(|(_, t)| t.clone()),
        )
        .collect();
    let outs: Vec<TypeExpr> = f_outs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != plug_index)
        .map(|(_, t)| t.clone())
        .chain(g_outs.iter().cloned())
        .collect();
    let mut asm = Assembler::new(TypeExpr::arrow(ins, outs), None);
    let pf = asm.embed(f)?;
    let pg = asm.embed(g)?;
    for path in f.input_leaves() {
        asm.alias(asm.shell_node(path.clone()), asm.boundary(pf, path));
    }
    // The one meta-composition link.
    asm.alias(
        asm.boundary(pf, PortPath(vec![Selector::output(plug_index)])),
        asm.boundary(pg, PortPath(vec![Selector::input(socket_index)])),
    );
    let mut next_socket = f_ins.len();
    for path in g.input_leaves() {
        let head = path.head().expect("leaf path");
        if head.index == socket_index && head.side == Side::Input && path.0.len() == 1 {
            continue;
        }
        let mut shifted = path.clone();
        shifted.0[0].index = next_socket;
        next_socket += 1;
        asm.alias(asm.shell_node(shifted), asm.boundary(pg, path));
    }
    let mut next_plug = 0usize;
    for path in f.output_leaves() {
        if path.head().expect("leaf path").index == plug_index && path.0.len() == 1 {
            continue;
        }
        let mut shifted = path.clone();
        shifted.0[0].index = next_plug;
        next_plug += 1;
        asm.alias(asm.shell_node(shifted), asm.boundary(pf, path));
    }
    for path in g.output_leaves() {
        let mut shifted = path.clone();
        shifted.0[0].index = next_plug;
        next_plug += 1;
        asm.alias(asm.shell_node(shifted), asm.boundary(pg, path));
    }
    Ok(asm.finish()?)
}

/// The pure wiring gadget `Comp : ((A -> B); (B -> C)) -> (A -> C)`. Its
/// construction holds no boards at all, only shell self-links: external
/// `A` routes to the first slot, the first slot's `B` to the second, and
/// the second slot's `C` back out.
pub fn comp_gadget(a: TypeExpr, b: TypeExpr, c: TypeExpr) -> FunctionalGadget {
    let ap = port_list(a.clone());
    let bp = port_list(b.clone());
    let cp = port_list(c.clone());
    let f_ty = TypeExpr::arrow(ap.clone(), bp.clone());
    let g_ty = TypeExpr::arrow(bp.clone(), cp.clone());
    let out_ty = TypeExpr::arrow(ap.clone(), cp.clone());
    let interface = TypeExpr::arrow(vec![f_ty, g_ty], vec![out_ty]);
    let mut con = new_construction(interface, Some("comp"));
    let shell = con.shell_id();
    let wire = |con: &mut Construction, from: PortPath, to: PortPath| {
        con.add_link(Port::new(shell, from), Port::new(shell, to))
            .expect("comp gadget wiring");
    };
    for leaf in side_leaves(&ap, Side::Input) {
        wire(
            &mut con,
            leaf.prefixed(Selector::output(0)),
            leaf.prefixed(Selector::input(0)),
        );
    }
    for (out_leaf, in_leaf) in side_leaves(&bp, Side::Output)
        .into_iter()
        .zip(side_leaves(&bp, Side::Input))
    {
        wire(
            &mut con,
            out_leaf.prefixed(Selector::input(0)),
            in_leaf.prefixed(Selector::input(1)),
        );
    }
    for leaf in side_leaves(&cp, Side::Output) {
        wire(
            &mut con,
            leaf.prefixed(Selector::input(1)),
            leaf.prefixed(Selector::output(0)),
        );
    }
    FunctionalGadget {
        construction: con,
        family: GadgetFamily::Comp { a, b, c },
    }
}

/// A fully discharged functional is left with the lone compound plug
/// `() -> (A -> B)`; such a construction *is* the produced function, so
/// the plug face becomes the interface. Stripping the leading `out.0`
/// keeps every inner-face orientation unchanged.
fn promote_produced_function(c: Construction) -> Construction {
    let outs = c.interface_type().arrow_outputs();
    if !c.interface_type().arrow_inputs().is_empty()
        || outs.len() != 1
        || !outs[0].is_arrow()
    {
        return c;
    }
    let inner = outs[0].clone();
    let old_shell = c.shell_id();
    let shell_stub = new_construction(inner, c.name());
    let new_shell = shell_stub.shell_id();
    let mut boards: std::collections::BTreeMap<_, _> = c
        .boards()
        .filter(|b| b.id != old_shell)
        .map(|b| (b.id, b.clone()))
        .collect();
    boards.insert(new_shell, shell_stub.boards().next().expect("shell").clone());
    let remap = |p: &crate::netgraph::Port| {
        if p.board == old_shell {
            let stripped = p
                .path
                .strip_head(Selector::output(0))
                .expect("nullary shell paths start at out.0");
            crate::netgraph::Port::new(new_shell, stripped)
        } else {
            p.clone()
        }
    };
    let links = c
        .links()
        .map(|l| crate::netgraph::Link {
            from: remap(&l.from),
            to: remap(&l.to),
        })
        .collect();
    let promoted =
        Construction::from_parts(c.name().map(str::to_string), new_shell, boards, links);
    promote_produced_function(promoted)
}

/// Index of the first arrow-typed socket of a construction's interface.
pub fn first_compound_socket(c: &Construction) -> Option<usize> {
    c.interface_type()
        .arrow_inputs()
        .iter()
        .position(|t| t.is_arrow())
}

/// Application of a functional to a function: discharges the first
/// compound socket.
pub fn apply(f: &Construction, g: &Construction) -> Result<Construction, FunctionalError> {
    let slot = first_compound_socket(f).ok_or(FunctionalError::NoCompoundSocket)?;
    apply_at(f, slot, g)
}

/// Application discharging the chosen socket: links run from the socket's
/// argument face into `g`'s sockets and from `g`'s plugs back into the
/// socket's result face; the interface loses that socket.
pub fn apply_at(
    f: &Construction,
    slot: usize,
    g: &Construction,
) -> Result<Construction, FunctionalError> {
    let ins = f.interface_type().arrow_inputs().to_vec();
    if slot >= ins.len() {
        return Err(FunctionalError::PortRange {
            what: "socket",
            index: slot,
            limit: ins.len(),
        });
    }
    let socket = &ins[slot];
    if !socket.is_arrow() {
        return Err(FunctionalError::SlotNotCompound { index: slot });
    }
    if g.interface_type() != socket {
        return Err(type_mismatch("apply argument", socket, g.interface_type()));
    }
    let remaining: Vec<TypeExpr> = ins
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != slot)
        .map(|(_, t)| t.clone())
        .collect();
    let interface = TypeExpr::arrow(
        remaining,
        f.interface_type().arrow_outputs().to_vec(),
    );
    let mut asm = Assembler::new(interface, None);
    let pf = asm.embed(f)?;
    let pg = asm.embed(g)?;
    for leaf in f.interface_layout().leaf_ports.clone() {
        let path = leaf.path;
        let head = path.head().expect("leaf path");
        if head.side == Side::Input && head.index == slot {
            let rest = path.strip_head(head).expect("head strip");
            asm.alias(asm.boundary(pf, path), asm.boundary(pg, rest));
        } else if head.side == Side::Input && head.index > slot {
            let mut shifted = path.clone();
            shifted.0[0].index -= 1;
            asm.alias(asm.shell_node(shifted), asm.boundary(pf, path));
        } else {
            asm.alias(asm.shell_node(path.clone()), asm.boundary(pf, path));
        }
    }
    Ok(promote_produced_function(asm.finish()?))
}

/// Curried multi-argument application, discharging compound sockets left
/// to right.
pub fn apply_many(
    f: &Construction,
    args: &[&Construction],
) -> Result<Construction, FunctionalError> {
    let mut cur = f.clone();
    for g in args {
        cur = apply(&cur, g)?;
    }
    Ok(cur)
}

/// `copy(a)`: the original and a structurally identical construction with
/// entirely fresh board ids.
pub fn copy(a: &Construction) -> (Construction, Construction) {
    let mut asm = Assembler::new(a.interface_type().clone(), a.name());
    let pa = asm.embed(a).expect("copying a valid construction");
    for leaf in a.interface_layout().leaf_ports.clone() {
        asm.alias(asm.shell_node(leaf.path.clone()), asm.boundary(pa, leaf.path));
    }
    let fresh = asm.finish().expect("copying a valid construction");
    (a.clone(), fresh)
}

/// The iteration gadget `Iter_A : (N; (A -> A)) -> (A -> A)` as a
/// construction around one opaque `iter` board; the evaluator unfolds it
/// once the count socket is fed by a numeral.
pub fn iter(item: TypeExpr) -> FunctionalGadget {
    let ap = port_list(item.clone());
    let endo = TypeExpr::arrow(ap.clone(), ap.clone());
    let interface = TypeExpr::arrow(vec![TypeExpr::Nat, endo.clone()], vec![endo]);
    let mut con = new_construction(interface.clone(), Some("iter"));
    let board = con
        .add_board(BoardKind::Composite("iter".to_string()), interface)
        .expect("iter board type");
    let shell = con.shell_id();
    for leaf in con.interface_layout().leaf_ports.clone() {
        let (from, to) = match leaf.orientation {
            // Orientation seen from outside the board; the shell side flips.
            crate::types::Orientation::Receiver => (
                Port::new(shell, leaf.path.clone()),
                Port::new(board, leaf.path.clone()),
            ),
            crate::types::Orientation::Emitter => (
                Port::new(board, leaf.path.clone()),
                Port::new(shell, leaf.path.clone()),
            ),
        };
        con.add_link(from, to).expect("iter pass-through wiring");
    }
    FunctionalGadget {
        construction: con,
        family: GadgetFamily::Iter { item },
    }
}

/// The graph form of `Iter(n; f)`: an `iter` gadget board whose count
/// socket is fed by the nullary source `count` and whose function socket
/// is wired to `f`, presented at the produced function's own type `A -> A`.
/// Elaboration unfolds it into the `n`-fold chain.
pub fn iter_graph(
    count: &Construction,
    f: &Construction,
) -> Result<Construction, FunctionalError> {
    if !count.interface_type().arrow_inputs().is_empty()
        || count.interface_type().arrow_outputs() != [TypeExpr::Nat]
    {
        return Err(type_mismatch(
            "iter count",
            &TypeExpr::numeral_source(),
            count.interface_type(),
        ));
    }
    let ins = f.interface_type().arrow_inputs().to_vec();
    let outs = f.interface_type().arrow_outputs().to_vec();
    if ins.is_empty() || ins != outs {
        return Err(FunctionalError::TypeMismatch {
            context: "iter function".to_string(),
            expected: "an endo-function A -> A".to_string(),
            found: format_type(f.interface_type()),
        });
    }
    let endo = f.interface_type().clone();
    let gadget_ty = TypeExpr::arrow(vec![TypeExpr::Nat, endo.clone()], vec![endo.clone()]);
    let mut asm = Assembler::new(endo, None);
    let board = asm.add_board(BoardKind::Composite("iter".to_string()), gadget_ty)?;
    let pc = asm.embed(count)?;
    asm.alias(
        asm.boundary(pc, PortPath(vec![Selector::output(0)])),
        asm.board_node(board, PortPath(vec![Selector::input(0)])),
    );
    let pf = asm.embed(f)?;
    for path in f.input_leaves().into_iter().chain(f.output_leaves()) {
        asm.alias(
            asm.board_node(board, path.prefixed(Selector::input(1))),
            asm.boundary(pf, path),
        );
    }
    for path in f.input_leaves().into_iter().chain(f.output_leaves()) {
        asm.alias(
            asm.shell_node(path.clone()),
            asm.board_node(board, path.prefixed(Selector::output(0))),
        );
    }
    Ok(asm.finish()?)
}

/// Unfolds `n`-fold iteration of an endo-function into a chain of `n`
/// instances (the original plus `n - 1` copies) joined end to end.
pub fn iter_unfold(n: u64, f: &Construction) -> Result<Construction, FunctionalError> {
    if n < 1 {
        return Err(FunctionalError::CountOutOfRange);
    }
    let ins = f.interface_type().arrow_inputs().to_vec();
    let outs = f.interface_type().arrow_outputs().to_vec();
    if ins.is_empty() || ins != outs {
        return Err(FunctionalError::TypeMismatch {
            context: "iter function".to_string(),
            expected: "an endo-function A -> A".to_string(),
            found: format_type(f.interface_type()),
        });
    }
    let mut asm = Assembler::new(f.interface_type().clone(), None);
    let mut instances = Vec::with_capacity(n as usize);
    let (original, mut copies) = (f, Vec::new());
    for _ in 1..n {
        copies.push(copy(original).1);
    }
    instances.push(asm.embed(original)?);
    for c in &copies {
        instances.push(asm.embed(c)?);
    }
    let in_leaves = f.input_leaves();
    let out_leaves = f.output_leaves();
    for path in &in_leaves {
        asm.alias(asm.shell_node(path.clone()), asm.boundary(instances[0], path.clone()));
    }
    for w in instances.windows(2) {
        for (out_path, in_path) in out_leaves.iter().zip(&in_leaves) {
            asm.alias(
                asm.boundary(w[0], out_path.clone()),
                asm.boundary(w[1], in_path.clone()),
            );
        }
    }
    let last = *instances.last().expect("n >= 1");
    for path in &out_leaves {
        asm.alias(asm.boundary(last, path.clone()), asm.shell_node(path.clone()));
    }
    Ok(asm.finish()?)
}

/// Binds one socket of `c` to a nullary source, discharging it from the
/// interface (partial application with a constant).
pub fn bind_input(
    c: &Construction,
    socket_index: usize,
    src: &Construction,
) -> Result<Construction, FunctionalError> {
    let ins = c.interface_type().arrow_inputs().to_vec();
    if socket_index >= ins.len() {
        return Err(FunctionalError::PortRange {
            what: "socket",
            index: socket_index,
            limit: ins.len(),
        });
    }
    if !src.interface_type().arrow_inputs().is_empty()
        || src.interface_type().arrow_outputs() != port_list(ins[socket_index].clone())
    {
        return Err(type_mismatch(
            "bind source",
            &TypeExpr::arrow(vec![], port_list(ins[socket_index].clone())),
            src.interface_type(),
        ));
    }
    let remaining: Vec<TypeExpr> = ins
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != socket_index)
        .map(|(_, t)| t.clone())
        .collect();
    let interface = TypeExpr::arrow(remaining, c.interface_type().arrow_outputs().to_vec());
    let mut asm = Assembler::new(interface, None);
    let pc = asm.embed(c)?;
    let ps = asm.embed(src)?;
    let bound: Vec<PortPath> = c
        .input_leaves()
        .into_iter()
        .filter(|p| p.head().map(|s| s.index) == Some(socket_index))
        .collect();
    for (src_out, target) in src.output_leaves().into_iter().zip(bound) {
        asm.alias(asm.boundary(ps, src_out), asm.boundary(pc, target));
    }
    for path in c.input_leaves() {
        let head = path.head().expect("leaf path");
        if head.index == socket_index {
            continue;
        }
        let mut shifted = path.clone();
        if head.index > socket_index {
            shifted.0[0].index -= 1;
        }
        asm.alias(asm.shell_node(shifted), asm.boundary(pc, path));
    }
    for path in c.output_leaves() {
        asm.alias(asm.boundary(pc, path.clone()), asm.shell_node(path));
    }
    Ok(promote_produced_function(asm.finish()?))
}

/// The higher-order primitive recursion iterator `R^A` as a meta
/// constructor: for a concrete count it elaborates to a finite chain of
/// stage circuits, exactly `base` for count 1 and `stage(k)` applied on
/// top for each following stage.
pub struct Recursor {
    pub item: TypeExpr,
}

pub fn recursor(item: TypeExpr) -> Recursor {
    Recursor { item }
}

impl Recursor {
    pub fn item_ports(&self) -> Vec<TypeExpr> {
        port_list(self.item.clone())
    }

    /// `() -> A`, the type of the base object as a source construction.
    pub fn base_type(&self) -> TypeExpr {
        TypeExpr::arrow(vec![], self.item_ports())
    }

    /// `A -> A`, the type of one elaborated stage.
    pub fn endo_type(&self) -> TypeExpr {
        TypeExpr::arrow(self.item_ports(), self.item_ports())
    }

    /// `(N;A) -> A`, the uncurried form of `c : N -> (A -> A)` accepted as
    /// a stage family given by one circuit.
    pub fn uncurried_step_type(&self) -> TypeExpr {
        let mut ins = vec![TypeExpr::Nat];
        ins.extend(self.item_ports());
        TypeExpr::arrow(ins, self.item_ports())
    }

    /// Builds the elaboration for count `k`: the base source chained
    /// through `stage(1) .. stage(k-1)`.
    pub fn elaborate_at(
        &self,
        base: &Construction,
        mut stage: impl FnMut(u64) -> Result<Construction, FunctionalError>,
        k: u64,
    ) -> Result<Construction, FunctionalError> {
        if k < 1 {
            return Err(FunctionalError::CountOutOfRange);
        }
        if base.interface_type() != &self.base_type() {
            return Err(type_mismatch(
                "recursor base",
                &self.base_type(),
                base.interface_type(),
            ));
        }
        let mut asm = Assembler::new(self.base_type(), None);
        let pb = asm.embed(base)?;
        let mut prev: Vec<_> = base
            .output_leaves()
            .into_iter()
            .map(|p| asm.boundary(pb, p))
            .collect();
        for j in 1..k {
            let circuit = stage(j)?;
            if circuit.interface_type() != &self.endo_type() {
                return Err(type_mismatch(
                    "recursor stage",
                    &self.endo_type(),
                    circuit.interface_type(),
                ));
            }
            let ps = asm.embed(&circuit)?;
            for (upstream, in_path) in prev.into_iter().zip(circuit.input_leaves()) {
                asm.alias(upstream, asm.boundary(ps, in_path));
            }
            prev = circuit
                .output_leaves()
                .into_iter()
                .map(|p| asm.boundary(ps, p))
                .collect();
        }
        let out_leaves: Vec<PortPath> = layout(&self.base_type())
            .leaf_ports
            .into_iter()
            .map(|l| l.path)
            .collect();
        for (upstream, out_path) in prev.into_iter().zip(out_leaves) {
            asm.alias(upstream, asm.shell_node(out_path));
        }
        Ok(asm.finish()?)
    }

    /// Evaluates the recursion by building the chain for `k` and running
    /// the fast evaluator on it.
    pub fn eval_at(
        &self,
        base: &Construction,
        stage: impl FnMut(u64) -> Result<Construction, FunctionalError>,
        k: u64,
    ) -> Result<Vec<BigUint>, FunctionalError> {
        let chain = self.elaborate_at(base, stage, k)?;
        Ok(run_fast_big(&chain, &[])?)
    }

    /// Evaluates with the stage family given by one uncurried circuit
    /// `c : (N;A) -> A`; stage `j` is `c` with its count socket bound to
    /// the numeral `j`.
    pub fn eval_uncurried(
        &self,
        base: &Construction,
        c: &Construction,
        k: u64,
    ) -> Result<Vec<BigUint>, FunctionalError> {
        if c.interface_type() != &self.uncurried_step_type() {
            return Err(type_mismatch(
                "recursor step family",
                &self.uncurried_step_type(),
                c.interface_type(),
            ));
        }
        self.eval_at(
            base,
            |j| bind_input(c, 0, &prim_numeral(j.into()).expect("j >= 1")),
            k,
        )
    }
}

/// Builds the elaboration chain for `rec` over naturals (`A = N`).
pub fn rec_build(
    base: &Construction,
    stage: impl FnMut(u64) -> Result<Construction, FunctionalError>,
    k: u64,
) -> Result<Construction, FunctionalError> {
    recursor(TypeExpr::Nat).elaborate_at(base, stage, k)
}

/// Graph-backed recursion over naturals; satisfies the defining equations
/// `R(a)(c)(1) = a` and `R(a)(c)(k+1) = c(k)(R(a)(c)(k))`.
pub fn rec_eval(
    base: &Construction,
    stage: impl FnMut(u64) -> Result<Construction, FunctionalError>,
    k: u64,
) -> Result<Vec<BigUint>, FunctionalError> {
    recursor(TypeExpr::Nat).eval_at(base, stage, k)
}

/// The recursor for stage families that are not one static circuit (the
/// stage may build and run a fresh circuit from the running value, e.g.
/// doubling via add). Same equations, applied stepwise.
pub fn rec_fold_meta(
    base: Vec<BigUint>,
    mut stage: impl FnMut(u64, &[BigUint]) -> Result<Vec<BigUint>, FunctionalError>,
    k: u64,
) -> Result<Vec<BigUint>, FunctionalError> {
    if k < 1 {
        return Err(FunctionalError::CountOutOfRange);
    }
    let mut r = base;
    for j in 1..k {
        r = stage(j, &r)?;
    }
    Ok(r)
}

fn small_count(n: &BigUint) -> Result<u64, FunctionalError> {
    n.to_u64()
        .ok_or_else(|| FunctionalError::CountTooLarge(n.clone()))
}

type NatFun = Rc<dyn Fn(&BigUint) -> Result<BigUint, FunctionalError>>;

/// One level of the shifted Ackermann tower: level 1 is the successor
/// circuit, level m+1 is the n-fold iterate of level m started at 2.
enum AckLevel {
    Circuit(Construction),
    Meta(NatFun),
}

impl AckLevel {
    fn call(&self, x: &BigUint) -> Result<BigUint, FunctionalError> {
        match self {
            AckLevel::Circuit(c) => {
                let mut out = run_fast_big(c, std::slice::from_ref(x))?;
                Ok(out.pop().expect("one output"))
            }
            AckLevel::Meta(f) => f(x),
        }
    }
}

fn next_ack_level(f: Rc<AckLevel>) -> AckLevel {
    AckLevel::Meta(Rc::new(move |n: &BigUint| {
        let two = BigUint::from(2u32);
        match f.as_ref() {
            // Where the previous level is a circuit, iterate it by graph
            // unfolding and run the chain on the base object 2.
            AckLevel::Circuit(c) => {
                let chain = iter_unfold(small_count(n)?, c)?;
                let mut out = run_fast_big(&chain, &[two])?;
                Ok(out.pop().expect("one output"))
            }
            // Otherwise chain applications the way the recursor chains
            // stages: r(1) = 2, r(j+1) = f(r(j)).
            AckLevel::Meta(_) => {
                let mut x = two;
                for _ in 0..small_count(n)? {
                    x = f.call(&x)?;
                }
                Ok(x)
            }
        }
    }))
}

/// Shifted Ackermann value on positive naturals:
/// `ack1(1, n) = n + 1`, `ack1(m+1, n)` iterates level `m` n times from 2.
pub fn ack1(m: &BigUint, n: &BigUint) -> Result<BigUint, FunctionalError> {
    if m.is_zero() || n.is_zero() {
        return Err(FunctionalError::CountOutOfRange);
    }
    let mut level = Rc::new(AckLevel::Circuit(prim_succ()));
    for _ in 1..small_count(m)? {
        level = Rc::new(next_ack_level(level));
    }
    level.call(n)
}

/// The Ackermann construction family: a `(N;N) -> N` construction whose
/// opaque `ack` board the fast evaluator interprets via `ack1`.
pub fn build_ackermann() -> Construction {
    let ty = TypeExpr::arrow(vec![TypeExpr::Nat, TypeExpr::Nat], vec![TypeExpr::Nat]);
    let mut con = new_construction(ty.clone(), Some("ackermann"));
    let board = con
        .add_board(BoardKind::Composite("ack".to_string()), ty)
        .expect("ack board type");
    let shell = con.shell_id();
    for leaf in con.interface_layout().leaf_ports.clone() {
        let (from, to) = match leaf.orientation {
            crate::types::Orientation::Receiver => (
                Port::new(shell, leaf.path.clone()),
                Port::new(board, leaf.path.clone()),
            ),
            crate::types::Orientation::Emitter => (
                Port::new(board, leaf.path.clone()),
                Port::new(shell, leaf.path.clone()),
            ),
        };
        con.add_link(from, to).expect("ack pass-through wiring");
    }
    con
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run_fast_nat;
    use crate::primitives::{prim_add, prim_const, product};

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn succ2() -> Construction {
        compose_direct(&prim_succ(), &prim_succ()).unwrap()
    }

    #[test]
    fn compose_direct_runs_left_to_right() {
        let c = succ2();
        assert_eq!(run_fast_nat(&c, &[3]).unwrap(), vec![big(5)]);
        let c2 = compose_direct(&prim_const(big(2)).unwrap(), &prim_succ()).unwrap();
        assert_eq!(run_fast_nat(&c2, &[9]).unwrap(), vec![big(3)]);
        let c3 = compose_direct(&prim_const(big(3)).unwrap(), &prim_succ()).unwrap();
        assert_eq!(run_fast_nat(&c3, &[12]).unwrap(), vec![big(4)]);
    }

    #[test]
    fn compose_direct_checks_types() {
        let err = compose_direct(&prim_succ(), &prim_add()).unwrap_err();
        assert!(matches!(err, FunctionalError::TypeMismatch { .. }));
    }

    #[test]
    fn compose_direct_links_every_middle_leaf() {
        // f: (N;N) -> (N;N) into g: (N;N) -> N joins on two leaves.
        let pair = product(&prim_succ(), &prim_succ()).unwrap();
        let joined = compose_direct(&pair, &prim_add()).unwrap();
        let middle = joined
            .links()
            .filter(|l| l.from.board != joined.shell_id() && l.to.board != joined.shell_id())
            .count();
        assert_eq!(middle, 2);
        assert_eq!(run_fast_nat(&joined, &[3, 4]).unwrap(), vec![big(9)]);
    }

    #[test]
    fn compose_at_partial_application() {
        // succ plugged into add's first socket: (x, y) -> succ(x) + y.
        let c = compose_at(&prim_succ(), 0, &prim_add(), 0).unwrap();
        assert_eq!(
            c.interface_type(),
            &TypeExpr::arrow(vec![TypeExpr::Nat, TypeExpr::Nat], vec![TypeExpr::Nat])
        );
        assert_eq!(run_fast_nat(&c, &[3, 4]).unwrap(), vec![big(8)]);
    }

    #[test]
    fn compose_at_builds_the_h_construction() {
        // h(x, y) = f(x) + g(y) with f = g = succ.
        let step1 = compose_at(&prim_succ(), 0, &prim_add(), 0).unwrap();
        let h = compose_at(&prim_succ(), 0, &step1, 1).unwrap();
        assert_eq!(run_fast_nat(&h, &[3, 4]).unwrap(), vec![big(9)]);
    }

    #[test]
    fn compose_at_range_and_occupancy() {
        let err = compose_at(&prim_succ(), 1, &prim_add(), 0).unwrap_err();
        assert!(matches!(err, FunctionalError::PortRange { .. }));

        // A malformed second argument whose socket is already fed inside.
        let mut bad = prim_succ();
        let succ_board = bad
            .boards()
            .find(|b| b.id != bad.shell_id())
            .map(|b| b.id)
            .unwrap();
        let num = bad
            .add_board(BoardKind::Numeral(big(9)), TypeExpr::numeral_source())
            .unwrap();
        bad.add_link_unchecked(
            Port::new(num, "out.0".parse().unwrap()),
            Port::new(succ_board, "in.0".parse().unwrap()),
        );
        let err = compose_at(&prim_succ(), 0, &bad, 0).unwrap_err();
        assert!(matches!(
            err,
            FunctionalError::Graph(GraphError::PortOccupied { .. })
        ));
    }

    #[test]
    fn comp_gadget_has_no_boards_and_full_wiring() {
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        assert_eq!(g.construction.board_count(), 1); // shell only
        assert_eq!(g.construction.link_count(), 3); // leaves(A)+leaves(B)+leaves(C)
        assert!(g.construction.validate().is_empty());

        let pair = TypeExpr::Product(vec![TypeExpr::Nat, TypeExpr::Nat]);
        let g2 = comp_gadget(pair.clone(), pair.clone(), pair);
        assert_eq!(g2.construction.board_count(), 1);
        assert_eq!(g2.construction.link_count(), 6);
        assert!(g2.construction.validate().is_empty());
    }

    #[test]
    fn apply_comp_gadget_composes() {
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        let applied = apply_many(&g.construction, &[&prim_succ(), &prim_succ()]).unwrap();
        assert_eq!(applied.interface_type(), &TypeExpr::unary());
        assert_eq!(run_fast_nat(&applied, &[4]).unwrap(), vec![big(6)]);

        let c7 = prim_const(big(7)).unwrap();
        let applied = apply_many(&g.construction, &[&prim_succ(), &c7]).unwrap();
        assert_eq!(run_fast_nat(&applied, &[5]).unwrap(), vec![big(7)]);
    }

    #[test]
    fn apply_is_curried() {
        // Discharging only the first slot leaves a compose-with-succ
        // functional of type (N -> N) -> (N -> N).
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        let with_succ = apply(&g.construction, &prim_succ()).unwrap();
        assert_eq!(
            crate::types::format_type(with_succ.interface_type()),
            "(N -> N) -> N -> N"
        );
        let both = apply(&with_succ, &prim_succ()).unwrap();
        assert_eq!(both.interface_type(), &TypeExpr::unary());
        assert_eq!(run_fast_nat(&both, &[3]).unwrap(), vec![big(5)]);
    }

    #[test]
    fn apply_checks_argument_type() {
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        let err = apply(&g.construction, &prim_add()).unwrap_err();
        assert!(matches!(err, FunctionalError::TypeMismatch { .. }));
        let err = apply(&prim_succ(), &prim_succ()).unwrap_err();
        assert!(matches!(err, FunctionalError::NoCompoundSocket));
        let err = apply_at(&build_ackermann(), 0, &prim_succ()).unwrap_err();
        assert!(matches!(err, FunctionalError::SlotNotCompound { .. }));
    }

    #[test]
    fn copy_is_disjoint_and_extensionally_equal() {
        let (orig, dup) = copy(&succ2());
        let orig_ids: std::collections::BTreeSet<_> = orig.boards().map(|b| b.id).collect();
        let dup_ids: std::collections::BTreeSet<_> = dup.boards().map(|b| b.id).collect();
        assert!(orig_ids.is_disjoint(&dup_ids));
        assert_eq!(orig.board_count(), dup.board_count());
        assert_eq!(orig.serialize(), dup.serialize());
        for x in 1..=10u64 {
            assert_eq!(
                run_fast_nat(&orig, &[x]).unwrap(),
                run_fast_nat(&dup, &[x]).unwrap()
            );
        }
    }

    #[test]
    fn copy_of_an_unfolded_chain() {
        let chain = iter_unfold(10, &prim_succ()).unwrap();
        assert_eq!(chain.board_count(), 11);
        let (orig, dup) = copy(&chain);
        assert_eq!(dup.board_count(), 11);
        let orig_ids: std::collections::BTreeSet<_> = orig.boards().map(|b| b.id).collect();
        assert!(dup.boards().all(|b| !orig_ids.contains(&b.id)));
    }

    #[test]
    fn iter_unfold_is_the_n_fold_composition() {
        let c = iter_unfold(4, &prim_succ()).unwrap();
        assert_eq!(run_fast_nat(&c, &[1]).unwrap(), vec![big(5)]);

        let one = iter_unfold(1, &prim_succ()).unwrap();
        for x in 1..=12u64 {
            assert_eq!(
                run_fast_nat(&one, &[x]).unwrap(),
                run_fast_nat(&prim_succ(), &[x]).unwrap()
            );
        }
        assert!(matches!(
            iter_unfold(0, &prim_succ()),
            Err(FunctionalError::CountOutOfRange)
        ));
        assert!(matches!(
            iter_unfold(2, &prim_add()),
            Err(FunctionalError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn iter_gadget_shape() {
        let g = iter(TypeExpr::Nat);
        assert!(g.construction.validate().is_empty());
        assert_eq!(
            crate::types::format_type(g.construction.interface_type()),
            "(N;N -> N) -> N -> N"
        );
        assert_eq!(g.construction.board_count(), 2);
        assert!(matches!(g.family, GadgetFamily::Iter { .. }));
    }

    #[test]
    fn iter_unfold_structure_counts() {
        let c = iter_unfold(4, &prim_succ()).unwrap();
        let f_instances = c.boards().filter(|b| b.id != c.shell_id()).count();
        assert_eq!(f_instances, 4);
        let joints = c
            .links()
            .filter(|l| l.from.board != c.shell_id() && l.to.board != c.shell_id())
            .count();
        assert_eq!(joints, 3);
    }

    #[test]
    fn recursor_base_case_and_add_family() {
        let rec = recursor(TypeExpr::Nat);
        let base = prim_numeral(big(1)).unwrap();
        // c(k) = add(k, .): stage k adds k.
        let stage = |j: u64| bind_input(&prim_add(), 0, &prim_numeral(big(j)).unwrap());
        assert_eq!(rec.eval_at(&base, stage, 1).unwrap(), vec![big(1)]);
        assert_eq!(rec.eval_at(&base, stage, 4).unwrap(), vec![big(7)]);
        assert!(matches!(
            rec.eval_at(&base, stage, 0),
            Err(FunctionalError::CountOutOfRange)
        ));
    }

    #[test]
    fn recursor_uncurried_step_is_add() {
        let rec = recursor(TypeExpr::Nat);
        let base = prim_numeral(big(1)).unwrap();
        assert_eq!(
            rec.eval_uncurried(&base, &prim_add(), 4).unwrap(),
            vec![big(7)]
        );
    }

    #[test]
    fn recursor_doubling_family() {
        // c(k)(x) = 2x for every k. Duplicating a running value is not
        // wireable in one static circuit (fan-out 1), so each stage builds
        // a fresh add circuit with the running value bound to one socket.
        let stage = |_j: u64, r: &[BigUint]| -> Result<Vec<BigUint>, FunctionalError> {
            let v = prim_numeral(r[0].clone()).expect("positive");
            let plus_v = bind_input(&prim_add(), 0, &v)?;
            Ok(crate::eval::run_fast_big(&plus_v, &[r[0].clone()])?)
        };
        assert_eq!(rec_fold_meta(vec![big(2)], stage, 4).unwrap(), vec![big(16)]);
        assert_eq!(rec_fold_meta(vec![big(2)], stage, 1).unwrap(), vec![big(2)]);
    }

    #[test]
    fn ackermann_small_values() {
        assert_eq!(ack1(&big(1), &big(5)).unwrap(), big(6));
        assert_eq!(ack1(&big(3), &big(4)).unwrap(), big(10));
        assert_eq!(ack1(&big(4), &big(2)).unwrap(), big(14));
    }

    #[test]
    fn ackermann_construction_evaluates() {
        let c = build_ackermann();
        assert_eq!(run_fast_nat(&c, &[3, 4]).unwrap(), vec![big(10)]);
        assert_eq!(run_fast_nat(&c, &[1, 5]).unwrap(), vec![big(6)]);
    }
}
