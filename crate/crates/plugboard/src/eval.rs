//! Two independent semantics over constructions plus the elaborator that
//! connects the functional layer to executable circuits.
//!
//! The fast evaluator resolves output ports backward (demand-driven) over
//! unbounded integers; the token simulator pushes unary values forward
//! through an elaborated first-order circuit, firing each board exactly
//! once when all of its input tokens are present. Elaboration unfolds
//! every `iter` gadget whose count socket is fed by a numeral board into a
//! finite chain, so the calculus stays total: accepted circuits are finite
//! DAGs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use thiserror::Error;

use crate::functionals::ack1;
use crate::netgraph::{Board, BoardId, BoardKind, Construction, GraphError, Link, Port};
use crate::primitives::PrimitiveKind;
use crate::types::{format_type, Orientation, PortPath, Selector, Side, TypeExpr};

/// A runtime value: a positive natural, a tuple for product ports, or the
/// denotation of a second-order construction.
#[derive(Clone, Debug)]
pub enum Value {
    Num(BigUint),
    Tuple(Vec<Value>),
    Closure(Box<Construction>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::Tuple(a), Value::Tuple(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => a.serialize() == b.serialize(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::Closure(c) => write!(f, "<{}>", format_type(c.interface_type())),
        }
    }
}

/// A fully elaborated construction: primitive and numeral boards only,
/// first-order interface, every receiver fed, acyclic.
#[derive(Clone, Debug)]
pub struct Circuit(Construction);

impl Circuit {
    pub fn construction(&self) -> &Construction {
        &self.0
    }

    pub fn into_construction(self) -> Construction {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub step: usize,
    pub board: String,
    pub inputs: Vec<BigUint>,
    pub outputs: Vec<BigUint>,
}

/// Firing record of a token run, in strictly increasing step order.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// One line per event: `step=<i> board=<id> in=<v1,...> out=<v1,...>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let ins: Vec<String> = e.inputs.iter().map(|v| v.to_string()).collect();
            let outs: Vec<String> = e.outputs.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "step={} board={} in={} out={}\n",
                e.step,
                e.board,
                ins.join(","),
                outs.join(",")
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unresolved functional: {0}")]
    UnresolvedFunctional(String),
    #[error("iteration count at {0} is not fed by a numeral board")]
    MissingNumeral(Port),
    #[error("dangling receiver {0}")]
    DanglingReceiver(Port),
    #[error("input mismatch: {0}")]
    InputMismatch(String),
    #[error("construction invalid: {0}")]
    InvalidConstruction(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("internal: {0}")]
    Internal(String),
}

fn composite_name(board: &Board) -> Option<&str> {
    match &board.kind {
        BoardKind::Composite(name) => Some(name),
        _ => None,
    }
}

/// An `iter` gadget occurrence taken apart: its concrete count, its
/// function template extracted as a standalone construction, and the
/// outer wiring of the produced function's face.
struct IterSite {
    iter_id: BoardId,
    numeral_id: BoardId,
    count: u64,
    template: Construction,
    template_ids: BTreeSet<BoardId>,
    /// Feeder of each produced-function argument leaf.
    outer_in: Vec<Option<Port>>,
    /// Consumer of each produced-function result leaf.
    outer_out: Vec<Option<Port>>,
}

/// Analyzes one `iter` board: the count socket must be fed directly by a
/// numeral board, and the region wired to the function socket must be
/// closed except through that socket.
fn analyze_iter(c: &Construction, iter_id: BoardId) -> Result<IterSite, EvalError> {
    let iter_board = c
        .board(iter_id)
        .ok_or(GraphError::UnknownBoard(iter_id))?
        .clone();
    let count_port = Port::new(iter_id, PortPath(vec![Selector::input(0)]));
    let count_link = c
        .feeder_of(&count_port)
        .ok_or_else(|| EvalError::MissingNumeral(count_port.clone()))?
        .clone();
    let numeral_id = count_link.from.board;
    let count = match c.board(numeral_id).map(|b| &b.kind) {
        Some(BoardKind::Numeral(k)) => k
            .to_u64()
            .ok_or_else(|| EvalError::InputMismatch(format!("iteration count {k} too large")))?,
        _ => return Err(EvalError::MissingNumeral(count_port)),
    };

    // Leaf groups of the iter board: requests and returns on the function
    // socket, arguments and results on the produced-function plug.
    let mut req = Vec::new();
    let mut ret = Vec::new();
    let mut arg = Vec::new();
    let mut res = Vec::new();
    for leaf in &iter_board.layout.leaf_ports {
        let head = leaf.path.head().expect("iter board leaves are nested");
        match (head.side, head.index, leaf.orientation) {
            (Side::Input, 1, Orientation::Emitter) => req.push(leaf.path.clone()),
            (Side::Input, 1, Orientation::Receiver) => ret.push(leaf.path.clone()),
            (Side::Output, 0, Orientation::Receiver) => arg.push(leaf.path.clone()),
            (Side::Output, 0, Orientation::Emitter) => res.push(leaf.path.clone()),
            _ => {}
        }
    }

    // What each request feeds and what feeds each return; a request wired
    // straight to a return is an identity template wire.
    let mut tin: Vec<Option<Port>> = Vec::with_capacity(req.len());
    let mut tout: Vec<Option<Port>> = Vec::with_capacity(ret.len());
    let mut wires: Vec<(usize, usize)> = Vec::new();
    for (j, p) in req.iter().enumerate() {
        let port = Port::new(iter_id, p.clone());
        tin.push(match c.consumer_of(&port) {
            None => None,
            Some(link) if link.to.board == iter_id => {
                match ret.iter().position(|r| r == &link.to.path) {
                    Some(k) => {
                        wires.push((j, k));
                        None
                    }
                    None => {
                        return Err(EvalError::UnresolvedFunctional(format!(
                            "iter board {iter_id} wired to itself at {}",
                            link.to
                        )))
                    }
                }
            }
            Some(link) => Some(link.to.clone()),
        });
    }
    for p in &ret {
        let port = Port::new(iter_id, p.clone());
        tout.push(match c.feeder_of(&port) {
            None => None,
            Some(link) if link.from.board == iter_id => None, // identity wire
            Some(link) => Some(link.from.clone()),
        });
    }

    // Flood out the template region from the boundary ports.
    let mut template_ids: BTreeSet<BoardId> = BTreeSet::new();
    let mut frontier: Vec<BoardId> = Vec::new();
    for p in tin.iter().chain(&tout).flatten() {
        if template_ids.insert(p.board) {
            frontier.push(p.board);
        }
    }
    while let Some(b) = frontier.pop() {
        for link in c.links() {
            for (mine, other) in [(&link.from, &link.to), (&link.to, &link.from)] {
                if mine.board != b {
                    continue;
                }
                if other.board == c.shell_id() {
                    return Err(EvalError::UnresolvedFunctional(format!(
                        "iterated function region touches the interface at {other}"
                    )));
                }
                if other.board == iter_id {
                    if other.path.head() != Some(Selector::input(1)) {
                        return Err(EvalError::UnresolvedFunctional(format!(
                            "iterated function region feeds back into the gadget at {other}"
                        )));
                    }
                    continue;
                }
                if other.board == numeral_id {
                    return Err(EvalError::UnresolvedFunctional(format!(
                        "iterated function region shares the count source {other}"
                    )));
                }
                if template_ids.insert(other.board) {
                    frontier.push(other.board);
                }
            }
        }
    }

    // Package the region as a standalone endo construction A -> A.
    let endo = match iter_board.ty().arrow_inputs().get(1) {
        Some(t) if t.is_arrow() => t.clone(),
        _ => {
            return Err(EvalError::UnresolvedFunctional(format!(
                "board {iter_id} does not have an iter gadget type"
            )))
        }
    };
    let shell_stub = crate::netgraph::new_construction(endo, None);
    let t_shell = shell_stub.shell_id();
    let mut t_boards: BTreeMap<BoardId, Board> = BTreeMap::new();
    t_boards.insert(
        t_shell,
        shell_stub.boards().next().expect("shell").clone(),
    );
    for id in &template_ids {
        t_boards.insert(*id, c.board(*id).expect("template board").clone());
    }
    let mut t_links: BTreeSet<Link> = c
        .links()
        .filter(|l| template_ids.contains(&l.from.board) && template_ids.contains(&l.to.board))
        .cloned()
        .collect();
    let strip = |p: &PortPath| PortPath(p.0[1..].to_vec());
    for (j, slot) in tin.iter().enumerate() {
        if let Some(target) = slot {
            t_links.insert(Link {
                from: Port::new(t_shell, strip(&req[j])),
                to: target.clone(),
            });
        }
    }
    for (k, slot) in tout.iter().enumerate() {
        if let Some(source) = slot {
            t_links.insert(Link {
                from: source.clone(),
                to: Port::new(t_shell, strip(&ret[k])),
            });
        }
    }
    for (j, k) in wires {
        t_links.insert(Link {
            from: Port::new(t_shell, strip(&req[j])),
            to: Port::new(t_shell, strip(&ret[k])),
        });
    }
    let template = Construction::from_parts(None, t_shell, t_boards, t_links);

    let outer_in = arg
        .iter()
        .map(|p| c.feeder_of(&Port::new(iter_id, p.clone())).map(|l| l.from.clone()))
        .collect();
    let outer_out = res
        .iter()
        .map(|p| c.consumer_of(&Port::new(iter_id, p.clone())).map(|l| l.to.clone()))
        .collect();
    Ok(IterSite {
        iter_id,
        numeral_id,
        count,
        template,
        template_ids,
        outer_in,
        outer_out,
    })
}

/// Replaces one `iter` gadget with the unfolded chain
/// `iter_unfold(count, template)` spliced into the surrounding wiring.
fn unfold_one_iter(c: &Construction, iter_id: BoardId) -> Result<Construction, EvalError> {
    let site = analyze_iter(c, iter_id)?;
    let chain = crate::functionals::iter_unfold(site.count, &site.template)
        .map_err(|e| EvalError::UnresolvedFunctional(e.to_string()))?;

    let dropped = |p: &Port| {
        p.board == site.iter_id
            || p.board == site.numeral_id
            || site.template_ids.contains(&p.board)
    };
    let mut boards: BTreeMap<BoardId, Board> = c
        .boards()
        .filter(|b| !dropped(&Port::new(b.id, PortPath::default())))
        .map(|b| (b.id, b.clone()))
        .collect();
    let mut links: BTreeSet<Link> = c
        .links()
        .filter(|l| !dropped(&l.from) && !dropped(&l.to))
        .cloned()
        .collect();

    let chain_shell = chain.shell_id();
    let chain_ins = chain.input_leaves();
    let chain_outs = chain.output_leaves();
    for board in chain.boards() {
        if board.id != chain_shell {
            boards.insert(board.id, board.clone());
        }
    }
    // A chain-shell port stands for the outer wiring of the produced
    // function's face; links that touch it get re-aimed there.
    let resolve = |p: &Port| -> Option<Port> {
        if p.board != chain_shell {
            return Some(p.clone());
        }
        if let Some(j) = chain_ins.iter().position(|q| q == &p.path) {
            return site.outer_in[j].clone();
        }
        let k = chain_outs
            .iter()
            .position(|q| q == &p.path)
            .expect("chain shell leaf");
        site.outer_out[k].clone()
    };
    for link in chain.links() {
        if let (Some(from), Some(to)) = (resolve(&link.from), resolve(&link.to)) {
            links.insert(Link { from, to });
        }
    }

    Ok(Construction::from_parts(
        c.name().map(str::to_string),
        c.shell_id(),
        boards,
        links,
    ))
}

/// Unfolds every `iter` gadget in the construction; other composites are
/// left in place.
fn unfold_iters(c: &Construction) -> Result<Construction, EvalError> {
    let mut cur = c.clone();
    for _ in 0..100_000 {
        let next_iter = cur
            .boards()
            .find(|b| composite_name(b) == Some("iter"))
            .map(|b| b.id);
        match next_iter {
            Some(id) => cur = unfold_one_iter(&cur, id)?,
            None => return Ok(cur),
        }
    }
    Err(EvalError::Internal("iter unfolding did not terminate".into()))
}

/// Elaborates a construction to a first-order circuit: unfolds every
/// iteration gadget, then checks that only primitive and numeral boards
/// remain, the interface is first-order, and every receiver is fed.
pub fn elaborate(c: &Construction) -> Result<Circuit, EvalError> {
    let cur = unfold_iters(c)?;
    for board in cur.boards() {
        if let Some(name) = composite_name(board) {
            return Err(EvalError::UnresolvedFunctional(format!(
                "composite board {} ({name}) cannot elaborate to a circuit",
                board.id
            )));
        }
    }
    if !cur.interface_type().is_first_order() {
        return Err(EvalError::UnresolvedFunctional(format!(
            "interface {} is second order",
            format_type(cur.interface_type())
        )));
    }
    check_no_dangling_receivers(&cur)?;
    let violations = cur.validate();
    if !violations.is_empty() {
        return Err(EvalError::InvalidConstruction(
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(Circuit(cur))
}

fn check_no_dangling_receivers(c: &Construction) -> Result<(), EvalError> {
    for board in c.boards() {
        for leaf in &board.layout.leaf_ports {
            let port = Port::new(board.id, leaf.path.clone());
            let effective = if board.id == c.shell_id() {
                leaf.orientation.flipped()
            } else {
                leaf.orientation
            };
            if effective == Orientation::Receiver && c.feeder_of(&port).is_none() {
                return Err(EvalError::DanglingReceiver(port));
            }
        }
    }
    Ok(())
}

fn fire_primitive(kind: &PrimitiveKind, inputs: &[BigUint]) -> Vec<BigUint> {
    match kind {
        PrimitiveKind::Succ => vec![&inputs[0] + 1u32],
        PrimitiveKind::Add => vec![&inputs[0] + &inputs[1]],
        PrimitiveKind::ConstK(k) => vec![k.clone()],
        PrimitiveKind::Proj { index, .. } => vec![inputs[index - 1].clone()],
    }
}

struct FastEval<'c> {
    c: &'c Construction,
    bound: BTreeMap<PortPath, BigUint>,
    memo: BTreeMap<Port, BigUint>,
}

impl<'c> FastEval<'c> {
    fn receiver_value(&mut self, port: &Port) -> Result<BigUint, EvalError> {
        match self.c.feeder_of(port) {
            Some(link) => self.emitter_value(&link.from.clone()),
            None => Err(EvalError::DanglingReceiver(port.clone())),
        }
    }

    /// Gathers all receiver-leaf values of a first-order board, strict.
    fn gather_inputs(&mut self, id: BoardId) -> Result<Vec<BigUint>, EvalError> {
        let paths: Vec<PortPath> = self.c.board(id).expect("board").layout.receivers()
            .map(|l| l.path.clone())
            .collect();
        let mut inputs = Vec::with_capacity(paths.len());
        for p in paths {
            inputs.push(self.receiver_value(&Port::new(id, p))?);
        }
        Ok(inputs)
    }

    /// Records the board's plug values (canonical emitter order) and
    /// returns the one demanded.
    fn memoize_outputs(
        &mut self,
        port: &Port,
        emitter_paths: Vec<PortPath>,
        outputs: Vec<BigUint>,
    ) -> Result<BigUint, EvalError> {
        if emitter_paths.len() != outputs.len() {
            return Err(EvalError::Internal(format!(
                "board {} produced {} outputs for {} plugs",
                port.board,
                outputs.len(),
                emitter_paths.len()
            )));
        }
        let mut mine = None;
        for (p, v) in emitter_paths.into_iter().zip(outputs) {
            if p == port.path {
                mine = Some(v.clone());
            }
            self.memo.insert(Port::new(port.board, p), v);
        }
        mine.ok_or_else(|| EvalError::Internal(format!("no output at {port}")))
    }

    fn emitter_value(&mut self, port: &Port) -> Result<BigUint, EvalError> {
        if let Some(v) = self.memo.get(port) {
            return Ok(v.clone());
        }
        let c = self.c;
        let board = c
            .board(port.board)
            .ok_or(GraphError::UnknownBoard(port.board))?;
        if port.board == c.shell_id() {
            let v = self
                .bound
                .get(&port.path)
                .cloned()
                .ok_or_else(|| EvalError::Internal(format!("unbound interface input {port}")))?;
            self.memo.insert(port.clone(), v.clone());
            return Ok(v);
        }
        let kind = board.kind.clone();
        match &kind {
            BoardKind::Numeral(k) => {
                let paths = board.layout.emitters().map(|l| l.path.clone()).collect();
                self.memoize_outputs(port, paths, vec![k.clone()])
            }
            BoardKind::Primitive(p) => {
                let inputs = self.gather_inputs(port.board)?;
                let paths = c
                    .board(port.board)
                    .expect("board")
                    .layout
                    .emitters()
                    .map(|l| l.path.clone())
                    .collect();
                self.memoize_outputs(port, paths, fire_primitive(p, &inputs))
            }
            BoardKind::Composite(name) if name == "ack" => {
                let inputs = self.gather_inputs(port.board)?;
                let out = ack1(&inputs[0], &inputs[1])
                    .map_err(|e| EvalError::InputMismatch(e.to_string()))?;
                let paths = c
                    .board(port.board)
                    .expect("board")
                    .layout
                    .emitters()
                    .map(|l| l.path.clone())
                    .collect();
                self.memoize_outputs(port, paths, vec![out])
            }
            // The iteration gadget evaluates as a loop: demand its count
            // and runtime arguments, then run the extracted template count
            // times. Only the produced-function results may be demanded
            // from outside.
            BoardKind::Composite(name) if name == "iter" => {
                if port.path.head() != Some(Selector::output(0)) {
                    return Err(EvalError::UnresolvedFunctional(format!(
                        "iter gadget port {port} demanded outside the produced function"
                    )));
                }
                let site = analyze_iter(c, port.board)?;
                let arg_paths: Vec<PortPath> = board
                    .layout
                    .receivers()
                    .filter(|l| l.path.head() == Some(Selector::output(0)))
                    .map(|l| l.path.clone())
                    .collect();
                let mut vals = Vec::with_capacity(arg_paths.len());
                for p in arg_paths {
                    vals.push(self.receiver_value(&Port::new(port.board, p))?);
                }
                for _ in 0..site.count {
                    vals = run_fast_big(&site.template, &vals)?;
                }
                let result_paths: Vec<PortPath> = c
                    .board(port.board)
                    .expect("board")
                    .layout
                    .emitters()
                    .filter(|l| l.path.head() == Some(Selector::output(0)))
                    .map(|l| l.path.clone())
                    .collect();
                self.memoize_outputs(port, result_paths, vals)
            }
            BoardKind::Composite(name) => Err(EvalError::UnresolvedFunctional(format!(
                "composite board {} ({name}) has no first-order value",
                port.board
            ))),
            BoardKind::Shell => Err(EvalError::Internal("shell reached as a board".into())),
        }
    }
}

fn value_matches(t: &TypeExpr, v: &Value) -> bool {
    match (t, v) {
        (TypeExpr::Nat, Value::Num(n)) => !n.is_zero(),
        (TypeExpr::Product(ts), Value::Tuple(vs)) => {
            ts.len() == vs.len() && ts.iter().zip(vs).all(|(t, v)| value_matches(t, v))
        }
        _ => false,
    }
}

fn flatten_value(v: &Value, out: &mut Vec<BigUint>) -> Result<(), EvalError> {
    match v {
        Value::Num(n) => out.push(n.clone()),
        Value::Tuple(vs) => {
            for v in vs {
                flatten_value(v, out)?;
            }
        }
        Value::Closure(_) => {
            return Err(EvalError::InputMismatch(
                "function values cannot flow through N ports".into(),
            ))
        }
    }
    Ok(())
}

/// Flattens structured values to one numeral per leaf.
pub fn flatten_values(vals: &[Value]) -> Result<Vec<BigUint>, EvalError> {
    let mut out = Vec::new();
    for v in vals {
        flatten_value(v, &mut out)?;
    }
    Ok(out)
}

/// Rebuilds structured values (one per arrow-side element) from a flat
/// list of leaf numerals.
pub fn structure_values(elements: &[TypeExpr], flat: &[BigUint]) -> Result<Vec<Value>, EvalError> {
    fn build(t: &TypeExpr, flat: &[BigUint], at: &mut usize) -> Result<Value, EvalError> {
        match t {
            TypeExpr::Nat => {
                let v = flat.get(*at).ok_or_else(|| {
                    EvalError::InputMismatch("too few values for the interface".into())
                })?;
                if v.is_zero() {
                    return Err(EvalError::InputMismatch("numerals start at 1".into()));
                }
                *at += 1;
                Ok(Value::Num(v.clone()))
            }
            TypeExpr::Product(ts) => {
                let mut vs = Vec::with_capacity(ts.len());
                for t in ts {
                    vs.push(build(t, flat, at)?);
                }
                Ok(Value::Tuple(vs))
            }
            TypeExpr::Arrow { .. } => Err(EvalError::InputMismatch(
                "cannot pass a value at a function-typed socket".into(),
            )),
        }
    }
    let mut at = 0usize;
    let mut out = Vec::with_capacity(elements.len());
    for t in elements {
        out.push(build(t, flat, &mut at)?);
    }
    if at != flat.len() {
        return Err(EvalError::InputMismatch(format!(
            "expected {at} values, got {}",
            flat.len()
        )));
    }
    Ok(out)
}

/// Denotational evaluation. First-order interfaces take one value per
/// socket and return one per plug; a second-order construction with no
/// inputs denotes itself as a closure.
pub fn run_fast(c: &Construction, inputs: &[Value]) -> Result<Vec<Value>, EvalError> {
    if !c.interface_type().is_first_order() {
        if inputs.is_empty() {
            return Ok(vec![Value::Closure(Box::new(c.clone()))]);
        }
        return Err(EvalError::InputMismatch(format!(
            "interface {} is second order; apply functionals instead of passing values",
            format_type(c.interface_type())
        )));
    }
    let ins = c.interface_type().arrow_inputs().to_vec();
    if ins.len() != inputs.len() {
        return Err(EvalError::InputMismatch(format!(
            "expected {} inputs, got {}",
            ins.len(),
            inputs.len()
        )));
    }
    for (t, v) in ins.iter().zip(inputs) {
        if !value_matches(t, v) {
            return Err(EvalError::InputMismatch(format!(
                "value {v} does not inhabit socket type {}",
                format_type(t)
            )));
        }
    }
    let flat = flatten_values(inputs)?;
    let mut bound = BTreeMap::new();
    for (path, v) in c.input_leaves().into_iter().zip(flat) {
        bound.insert(path, v);
    }
    let mut eval = FastEval {
        c,
        bound,
        memo: BTreeMap::new(),
    };
    let shell = c.shell_id();
    let mut flat_out = Vec::new();
    for path in c.output_leaves() {
        flat_out.push(eval.receiver_value(&Port::new(shell, path))?);
    }
    structure_values(c.interface_type().arrow_outputs(), &flat_out)
}

/// `run_fast` over flat leaf numerals.
pub fn run_fast_big(c: &Construction, flat: &[BigUint]) -> Result<Vec<BigUint>, EvalError> {
    let ins = c.interface_type().arrow_inputs().to_vec();
    let vals = structure_values(&ins, flat)?;
    flatten_values(&run_fast(c, &vals)?)
}

/// `run_fast` over small test inputs.
pub fn run_fast_nat(c: &Construction, flat: &[u64]) -> Result<Vec<BigUint>, EvalError> {
    let flat: Vec<BigUint> = flat.iter().map(|&v| BigUint::from(v)).collect();
    run_fast_big(c, &flat)
}

/// Token-flow simulation of an elaborated circuit: one numeral per input
/// leaf, each board fires exactly once when all of its inputs are present,
/// ties broken by canonical board name.
pub fn run_tokens(circ: &Circuit, inputs: &[BigUint]) -> Result<(Vec<BigUint>, Trace), EvalError> {
    let c = circ.construction();
    check_no_dangling_receivers(c)?;
    let in_leaves = c.input_leaves();
    if in_leaves.len() != inputs.len() {
        return Err(EvalError::InputMismatch(format!(
            "expected {} input tokens, got {}",
            in_leaves.len(),
            inputs.len()
        )));
    }
    for v in inputs {
        if v.is_zero() {
            return Err(EvalError::InputMismatch("numerals start at 1".into()));
        }
    }
    let names = c.canonical_names();
    let shell = c.shell_id();

    let mut tokens: BTreeMap<Port, BigUint> = BTreeMap::new();
    let deposit = |tokens: &mut BTreeMap<Port, BigUint>, from: &Port, v: BigUint| {
        if let Some(link) = c.consumer_of(from) {
            tokens.insert(link.to.clone(), v);
        }
    };
    for (path, v) in in_leaves.iter().zip(inputs) {
        deposit(&mut tokens, &Port::new(shell, path.clone()), v.clone());
    }

    let receiver_paths: BTreeMap<BoardId, Vec<PortPath>> = c
        .boards()
        .filter(|b| b.id != shell)
        .map(|b| {
            (
                b.id,
                b.layout.receivers().map(|l| l.path.clone()).collect(),
            )
        })
        .collect();
    let ready_now = |tokens: &BTreeMap<Port, BigUint>, id: BoardId| {
        receiver_paths[&id]
            .iter()
            .all(|p| tokens.contains_key(&Port::new(id, p.clone())))
    };

    let mut fired: BTreeSet<BoardId> = BTreeSet::new();
    let mut ready: BTreeSet<(String, BoardId)> = c
        .boards()
        .filter(|b| b.id != shell && ready_now(&tokens, b.id))
        .map(|b| (names[&b.id].clone(), b.id))
        .collect();

    let mut trace = Trace::default();
    let mut step = 0usize;
    while let Some(entry) = ready.iter().next().cloned() {
        ready.remove(&entry);
        let (name, id) = entry;
        if !fired.insert(id) {
            continue;
        }
        step += 1;
        let board = c.board(id).expect("board");
        let ins: Vec<BigUint> = receiver_paths[&id]
            .iter()
            .map(|p| tokens[&Port::new(id, p.clone())].clone())
            .collect();
        let outs = match &board.kind {
            BoardKind::Numeral(k) => vec![k.clone()],
            BoardKind::Primitive(p) => fire_primitive(p, &ins),
            other => {
                return Err(EvalError::Internal(format!(
                    "non-primitive board {} ({}) in a circuit",
                    id,
                    other.kind_string()
                )))
            }
        };
        let emitter_paths: Vec<PortPath> = board.layout.emitters().map(|l| l.path.clone()).collect();
        for (p, v) in emitter_paths.iter().zip(&outs) {
            deposit(&mut tokens, &Port::new(id, p.clone()), v.clone());
        }
        trace.events.push(TraceEvent {
            step,
            board: name,
            inputs: ins,
            outputs: outs,
        });
        for link in c.links().filter(|l| l.from.board == id) {
            let other = link.to.board;
            if other != shell && !fired.contains(&other) && ready_now(&tokens, other) {
                ready.insert((names[&other].clone(), other));
            }
        }
    }

    let mut outputs = Vec::new();
    for path in c.output_leaves() {
        match tokens.get(&Port::new(shell, path.clone())) {
            Some(v) => outputs.push(v.clone()),
            None => {
                return Err(EvalError::Internal(format!(
                    "no token arrived at interface output {path}"
                )))
            }
        }
    }
    Ok((outputs, trace))
}

/// Differential helper: true iff both semantics agree on the flat inputs.
pub fn agree(c: &Construction, flat: &[BigUint]) -> Result<bool, EvalError> {
    let fast = run_fast_big(c, flat)?;
    let (tokens, _) = run_tokens(&elaborate(c)?, flat)?;
    Ok(fast == tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{apply_many, comp_gadget, compose_at, iter, iter_graph, iter_unfold};
    use crate::netgraph::new_construction;
    use crate::primitives::{prim_add, prim_numeral, prim_succ};
    use crate::types::parse_type;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn bigs(ns: &[u64]) -> Vec<BigUint> {
        ns.iter().map(|&n| BigUint::from(n)).collect()
    }

    /// The graph form of `Iter(n; succ-like f)`.
    fn iter_n(n: u64, f: &Construction) -> Construction {
        iter_graph(&prim_numeral(big(n)).unwrap(), f).unwrap()
    }

    #[test]
    fn elaborate_unfolds_iter_gadgets() {
        let c = iter_n(4, &prim_succ());
        assert_eq!(c.interface_type(), &parse_type("N -> N").unwrap());
        let circuit = elaborate(&c).unwrap();
        let succ_count = circuit
            .construction()
            .boards()
            .filter(|b| matches!(b.kind, BoardKind::Primitive(PrimitiveKind::Succ)))
            .count();
        assert_eq!(succ_count, 4);
        assert_eq!(
            run_fast_big(circuit.construction(), &bigs(&[1])).unwrap(),
            bigs(&[5])
        );
    }

    #[test]
    fn elaborate_is_identity_on_circuits() {
        let c = prim_succ();
        let circuit = elaborate(&c).unwrap();
        assert_eq!(circuit.construction().serialize(), c.serialize());
    }

    #[test]
    fn elaborate_requires_a_fed_count_socket() {
        let gadget = iter(TypeExpr::Nat);
        let pending = apply_many(&gadget.construction, &[&prim_succ()]).unwrap();
        let err = elaborate(&pending).unwrap_err();
        assert!(matches!(err, EvalError::MissingNumeral(_)), "{err}");
    }

    #[test]
    fn elaborate_rejects_second_order_interfaces() {
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        let err = elaborate(&g.construction).unwrap_err();
        assert!(matches!(err, EvalError::UnresolvedFunctional(_)), "{err}");
    }

    #[test]
    fn elaboration_preserves_extension() {
        let c = iter_n(3, &prim_succ());
        let circuit = elaborate(&c).unwrap();
        for x in 1..=12u64 {
            assert_eq!(
                run_fast_big(&c, &bigs(&[x])).unwrap(),
                run_fast_big(circuit.construction(), &bigs(&[x])).unwrap()
            );
        }
    }

    #[test]
    fn tokens_match_fast_on_simple_circuits() {
        let circuit = elaborate(&prim_succ()).unwrap();
        let (out, trace) = run_tokens(&circuit, &bigs(&[3])).unwrap();
        assert_eq!(out, bigs(&[4]));
        assert_eq!(trace.events.len(), 1);

        let chain = iter_unfold(3, &prim_succ()).unwrap();
        let circuit = elaborate(&chain).unwrap();
        let (out, trace) = run_tokens(&circuit, &bigs(&[2])).unwrap();
        assert_eq!(out, bigs(&[5]));
        assert_eq!(trace.events.len(), 3);
        let steps: Vec<usize> = trace.events.iter().map(|e| e.step).collect();
        assert_eq!(steps, vec![1, 2, 3]);
    }

    #[test]
    fn tokens_fire_add_last_in_h_circuit() {
        let step1 = compose_at(&prim_succ(), 0, &prim_add(), 0).unwrap();
        let h = compose_at(&prim_succ(), 0, &step1, 1).unwrap();
        let circuit = elaborate(&h).unwrap();
        let (out, trace) = run_tokens(&circuit, &bigs(&[3, 4])).unwrap();
        assert_eq!(out, bigs(&[9]));
        let last = trace.events.last().unwrap();
        assert_eq!(last.outputs, bigs(&[9]));
        assert_eq!(trace.events.len(), 3);
    }

    #[test]
    fn tokens_reject_dangling_receivers() {
        let c = new_construction(parse_type("N -> N").unwrap(), None);
        let err = elaborate(&c).unwrap_err();
        assert!(matches!(err, EvalError::DanglingReceiver(_)), "{err}");
    }

    #[test]
    fn trace_renders_one_line_per_event() {
        let circuit = elaborate(&prim_succ()).unwrap();
        let (_, trace) = run_tokens(&circuit, &bigs(&[3])).unwrap();
        let text = trace.render();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("step=1 board=b001 in=3 out=4"), "{text}");
    }

    #[test]
    fn agree_on_primitives() {
        for x in 1..=12u64 {
            assert!(agree(&prim_succ(), &bigs(&[x])).unwrap());
        }
        assert!(agree(&prim_add(), &bigs(&[3, 9])).unwrap());
    }

    #[test]
    fn run_fast_checks_inputs() {
        let err = run_fast_big(&prim_add(), &bigs(&[3])).unwrap_err();
        assert!(matches!(err, EvalError::InputMismatch(_)));
        let err = run_fast_big(&prim_succ(), &[BigUint::zero()]).unwrap_err();
        assert!(matches!(err, EvalError::InputMismatch(_)));
    }

    #[test]
    fn second_order_construction_denotes_a_closure() {
        let g = comp_gadget(TypeExpr::Nat, TypeExpr::Nat, TypeExpr::Nat);
        let out = run_fast(&g.construction, &[]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(matches!(out[0], Value::Closure(_)));
    }

    #[test]
    fn unknown_composites_have_no_value() {
        let mut c = new_construction(parse_type("N -> N").unwrap(), None);
        let b = c
            .add_board(
                BoardKind::Composite("mystery".to_string()),
                parse_type("N -> N").unwrap(),
            )
            .unwrap();
        let shell = c.shell_id();
        c.add_link(
            Port::new(shell, "in.0".parse().unwrap()),
            Port::new(b, "in.0".parse().unwrap()),
        )
        .unwrap();
        c.add_link(
            Port::new(b, "out.0".parse().unwrap()),
            Port::new(shell, "out.0".parse().unwrap()),
        )
        .unwrap();
        let err = run_fast_big(&c, &bigs(&[3])).unwrap_err();
        assert!(matches!(err, EvalError::UnresolvedFunctional(_)), "{err}");
        let err = elaborate(&c).unwrap_err();
        assert!(matches!(err, EvalError::UnresolvedFunctional(_)), "{err}");
    }

    #[test]
    fn product_sockets_take_tuple_values() {
        // ((N;N);N) -> N summing all three leaves: the first socket is a
        // grouped pair, so the structured input is a tuple.
        let mut c = new_construction(parse_type("((N;N);N) -> N").unwrap(), None);
        let unary_sum = prim_add().interface_type().clone();
        let a1 = c
            .add_board(
                BoardKind::Primitive(crate::primitives::PrimitiveKind::Add),
                unary_sum.clone(),
            )
            .unwrap();
        let a2 = c
            .add_board(
                BoardKind::Primitive(crate::primitives::PrimitiveKind::Add),
                unary_sum,
            )
            .unwrap();
        let shell = c.shell_id();
        let link = |c: &mut Construction, f: &str, fb, t: &str, tb| {
            c.add_link(
                Port::new(fb, f.parse().unwrap()),
                Port::new(tb, t.parse().unwrap()),
            )
            .unwrap();
        };
        link(&mut c, "in.0.out.0", shell, "in.0", a1);
        link(&mut c, "in.0.out.1", shell, "in.1", a1);
        link(&mut c, "out.0", a1, "in.0", a2);
        link(&mut c, "in.1", shell, "in.1", a2);
        link(&mut c, "out.0", a2, "out.0", shell);
        assert!(c.validate().is_empty());

        let out = run_fast(
            &c,
            &[
                Value::Tuple(vec![Value::Num(big(2)), Value::Num(big(3))]),
                Value::Num(big(4)),
            ],
        )
        .unwrap();
        assert_eq!(out, vec![Value::Num(big(9))]);
        // flat leaf form and the token route agree
        assert_eq!(run_fast_big(&c, &bigs(&[2, 3, 4])).unwrap(), bigs(&[9]));
        assert!(agree(&c, &bigs(&[2, 3, 4])).unwrap());
        // a bare number does not inhabit the grouped socket
        let err = run_fast(&c, &[Value::Num(big(2)), Value::Num(big(4))]).unwrap_err();
        assert!(matches!(err, EvalError::InputMismatch(_)));
    }

    #[test]
    fn corrupted_wiring_breaks_the_differential() {
        // Swap the two output links of a product circuit; the corrupted
        // token run must disagree with the intact fast evaluation.
        let p = crate::primitives::product(
            &prim_succ(),
            &crate::primitives::prim_const(big(9)).unwrap(),
        )
        .unwrap();
        let circuit = elaborate(&p).unwrap();
        let intact = circuit.construction();
        let shell = intact.shell_id();
        let out0 = Port::new(shell, "out.0".parse().unwrap());
        let out1 = Port::new(shell, "out.1".parse().unwrap());
        let f0 = intact.feeder_of(&out0).unwrap().from.clone();
        let f1 = intact.feeder_of(&out1).unwrap().from.clone();
        let boards = intact.boards().map(|b| (b.id, b.clone())).collect();
        let links = intact
            .links()
            .map(|l| {
                if l.to == out0 {
                    crate::netgraph::Link {
                        from: f1.clone(),
                        to: out0.clone(),
                    }
                } else if l.to == out1 {
                    crate::netgraph::Link {
                        from: f0.clone(),
                        to: out1.clone(),
                    }
                } else {
                    l.clone()
                }
            })
            .collect();
        let corrupted = Construction::from_parts(None, shell, boards, links);
        let swapped = elaborate(&corrupted).unwrap();
        let (tokens, _) = run_tokens(&swapped, &bigs(&[3, 5])).unwrap();
        let fast = run_fast_big(&p, &bigs(&[3, 5])).unwrap();
        assert_ne!(tokens, fast);
        assert_eq!(tokens, bigs(&[9, 4]));
        assert_eq!(fast, bigs(&[4, 9]));
    }
}
