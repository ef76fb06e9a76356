//! Boards, links, and constructions: the universal graph representation of
//! both first-order circuits and higher-order functional gadgets.
//!
//! A construction is a set of boards plus directed links between leaf ports,
//! with the construction's own type materialized as an interface shell board
//! whose inner face has flipped orientations. Links run emitter -> receiver,
//! fan-in and fan-out are both 1 (duplication only via the copy functional),
//! and the induced dataflow graph must stay acyclic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::PrimitiveKind;
use crate::types::{
    format_type, layout, parse_type, BoardLayout, Orientation, PortPath, Selector, Side, TypeExpr,
};

/// Identifier of a board. Fresh ids are process-unique so that copies of a
/// construction never share ids with the original.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoardId(u64);

static NEXT_BOARD_ID: AtomicU64 = AtomicU64::new(1);

impl BoardId {
    pub fn fresh() -> BoardId {
        BoardId(NEXT_BOARD_ID.fetch_add(1, AtomicOrdering::Relaxed))
    }
}

impl fmt::Display for BoardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoardKind {
    Primitive(PrimitiveKind),
    /// Nullary source of a literal, the only zero-input boards permitted.
    Numeral(BigUint),
    /// Opaque named gadget; `iter` and `ack` are understood by the evaluator.
    Composite(String),
    /// The construction's own interface, seen from inside.
    Shell,
}

impl BoardKind {
    /// Serialization form: `primitive:<name>`, `numeral:<decimal>`,
    /// `composite:<name>`, or `shell`.
    pub fn kind_string(&self) -> String {
        match self {
            BoardKind::Primitive(p) => format!("primitive:{}", p.name()),
            BoardKind::Numeral(v) => format!("numeral:{v}"),
            BoardKind::Composite(name) => format!("composite:{name}"),
            BoardKind::Shell => "shell".to_string(),
        }
    }

    pub fn parse_kind(s: &str) -> Result<BoardKind, String> {
        if s == "shell" {
            return Ok(BoardKind::Shell);
        }
        if let Some(rest) = s.strip_prefix("primitive:") {
            return PrimitiveKind::parse(rest)
                .map(BoardKind::Primitive)
                .ok_or_else(|| format!("unknown primitive {rest:?}"));
        }
        if let Some(rest) = s.strip_prefix("numeral:") {
            let v: BigUint = rest
                .parse()
                .map_err(|_| format!("bad numeral {rest:?}"))?;
            if v.is_zero() {
                return Err("numerals start at 1".to_string());
            }
            return Ok(BoardKind::Numeral(v));
        }
        if let Some(rest) = s.strip_prefix("composite:") {
            if rest.is_empty() {
                return Err("empty composite name".to_string());
            }
            return Ok(BoardKind::Composite(rest.to_string()));
        }
        Err(format!("unknown board kind {s:?}"))
    }

    /// Short label for rendering.
    pub fn label(&self) -> String {
        match self {
            BoardKind::Primitive(p) => p.name(),
            BoardKind::Numeral(v) => format!("numeral:{v}"),
            BoardKind::Composite(name) => name.clone(),
            BoardKind::Shell => "shell".to_string(),
        }
    }

    /// The type this kind of board must carry, where it is determined.
    pub fn expected_type(&self) -> Option<TypeExpr> {
        match self {
            BoardKind::Primitive(p) => Some(p.board_type()),
            BoardKind::Numeral(_) => Some(TypeExpr::numeral_source()),
            BoardKind::Composite(_) | BoardKind::Shell => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Board {
    pub id: BoardId,
    pub layout: BoardLayout,
    pub kind: BoardKind,
}

impl Board {
    pub fn ty(&self) -> &TypeExpr {
        &self.layout.board_type
    }
}

/// A board port: board id plus leaf path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port {
    pub board: BoardId,
    pub path: PortPath,
}

impl Port {
    pub fn new(board: BoardId, path: PortPath) -> Port {
        Port { board, path }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.board, self.path)
    }
}

/// A directed connection from an emitter leaf to a receiver leaf.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: Port,
    pub to: Port,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

#[derive(Clone, Debug, Error)]
pub enum GraphError {
    #[error("unknown board {0}")]
    UnknownBoard(BoardId),
    #[error("invalid path {path} on board {board}: {detail}")]
    InvalidPath {
        board: BoardId,
        path: PortPath,
        detail: String,
    },
    #[error("type mismatch at {port}: links join N leaves, found {found}")]
    TypeMismatch { port: Port, found: String },
    #[error("orientation violation on link {from} -> {to}: {detail}")]
    OrientationError {
        from: Port,
        to: Port,
        detail: String,
    },
    #[error("port occupied: {port} already has a link {role}")]
    PortOccupied { port: Port, role: &'static str },
    #[error("link {from} -> {to} would close a feedback loop")]
    CycleError { from: Port, to: Port },
    #[error("board {board}: {detail}")]
    BoardTypeError { board: BoardId, detail: String },
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

/// A reported invariant violation; `validate` returns these as data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BoardType { board: BoardId, detail: String },
    BadEndpoint { link: Link, detail: String },
    TypeViolation { link: Link, port: Port, found: String },
    OrientationViolation { link: Link, detail: String },
    FanIn { port: Port },
    FanOut { port: Port },
    Cycle { link: Link },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BoardType { board, detail } => write!(f, "board {board}: {detail}"),
            Violation::BadEndpoint { link, detail } => write!(f, "link {link}: {detail}"),
            Violation::TypeViolation { link, port, found } => {
                write!(f, "link {link}: endpoint {port} is not a N leaf (found {found})")
            }
            Violation::OrientationViolation { link, detail } => {
                write!(f, "link {link}: {detail}")
            }
            Violation::FanIn { port } => write!(f, "receiver {port} fed more than once"),
            Violation::FanOut { port } => write!(f, "emitter {port} duplicated without copy"),
            Violation::Cycle { link } => write!(f, "link {link} lies on a feedback loop"),
        }
    }
}

/// Role of a leaf on a non-shell board, for dataflow dependency purposes.
/// Plain inputs feed plain outputs and argument requests; values returned
/// from a compound socket feed plain outputs and *other* sockets' requests.
/// A socket's own request -> return round trip happens outside the board
/// (through whatever is plugged into the socket), so it is not an internal
/// edge; that is what makes application wiring loop-free while genuine
/// feedback is still rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeafRole {
    Pin,
    Pout,
    Req(usize),
    Ret(usize),
}

fn classify_leaf(ty: &TypeExpr, path: &PortPath, orientation: Orientation) -> LeafRole {
    let head = match path.head() {
        Some(h) => h,
        None => {
            return match orientation {
                Orientation::Receiver => LeafRole::Pin,
                Orientation::Emitter => LeafRole::Pout,
            }
        }
    };
    if head.side == Side::Input {
        let socket = &ty.arrow_inputs()[head.index];
        if crosses_arrow(socket, &path.0[1..]) {
            match orientation {
                Orientation::Emitter => LeafRole::Req(head.index),
                Orientation::Receiver => LeafRole::Ret(head.index),
            }
        } else {
            LeafRole::Pin
        }
    } else {
        match orientation {
            Orientation::Receiver => LeafRole::Pin,
            Orientation::Emitter => LeafRole::Pout,
        }
    }
}

fn crosses_arrow(t: &TypeExpr, rest: &[Selector]) -> bool {
    let mut cur = t;
    for sel in rest {
        if cur.is_arrow() {
            return true;
        }
        cur = match cur {
            TypeExpr::Product(xs) => match xs.get(sel.index) {
                Some(x) => x,
                None => return false,
            },
            _ => return false,
        };
    }
    cur.is_arrow()
}

/// A graph of boards and links with a designated interface shell.
#[derive(Clone, Debug)]
pub struct Construction {
    name: Option<String>,
    boards: BTreeMap<BoardId, Board>,
    links: BTreeSet<Link>,
    shell: BoardId,
}

/// Creates a construction containing only the interface shell.
pub fn new_construction(interface_type: TypeExpr, name: Option<&str>) -> Construction {
    let id = BoardId::fresh();
    let shell = Board {
        id,
        layout: layout(&interface_type),
        kind: BoardKind::Shell,
    };
    let mut boards = BTreeMap::new();
    boards.insert(id, shell);
    Construction {
        name: name.map(str::to_string),
        boards,
        links: BTreeSet::new(),
        shell: id,
    }
}

impl Construction {
    pub(crate) fn from_parts(
        name: Option<String>,
        shell: BoardId,
        boards: BTreeMap<BoardId, Board>,
        links: BTreeSet<Link>,
    ) -> Construction {
        Construction {
            name,
            boards,
            links,
            shell,
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn set_name(&mut self, name: Option<&str>) {
        self.name = name.map(str::to_string);
    }

    pub fn shell_id(&self) -> BoardId {
        self.shell
    }

    pub fn interface_type(&self) -> &TypeExpr {
        self.boards[&self.shell].ty()
    }

    pub fn interface_layout(&self) -> &BoardLayout {
        &self.boards[&self.shell].layout
    }

    pub fn board(&self, id: BoardId) -> Option<&Board> {
        self.boards.get(&id)
    }

    pub fn boards(&self) -> impl Iterator<Item = &Board> {
        self.boards.values()
    }

    pub fn board_count(&self) -> usize {
        self.boards.len()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.iter()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Interface input leaves in canonical order (paths on the shell).
    pub fn input_leaves(&self) -> Vec<PortPath> {
        self.interface_layout()
            .leaf_ports
            .iter()
            .filter(|p| p.path.head().map(|s| s.side) == Some(Side::Input))
            .map(|p| p.path.clone())
            .collect()
    }

    /// Interface output leaves in canonical order.
    pub fn output_leaves(&self) -> Vec<PortPath> {
        self.interface_layout()
            .leaf_ports
            .iter()
            .filter(|p| p.path.head().map(|s| s.side) == Some(Side::Output))
            .map(|p| p.path.clone())
            .collect()
    }

    /// Orientation of a port as the link machinery sees it: the shell's
    /// inner face is flipped relative to the plain layout.
    pub fn effective_orientation(&self, port: &Port) -> Result<Orientation, GraphError> {
        let board = self
            .boards
            .get(&port.board)
            .ok_or(GraphError::UnknownBoard(port.board))?;
        match port.path.resolve(board.ty()) {
            Some(TypeExpr::Nat) => {}
            Some(other) => {
                return Err(GraphError::TypeMismatch {
                    port: port.clone(),
                    found: format_type(other),
                })
            }
            None => {
                return Err(GraphError::InvalidPath {
                    board: port.board,
                    path: port.path.clone(),
                    detail: "no such leaf".to_string(),
                })
            }
        }
        let o = port.path.orientation();
        Ok(if port.board == self.shell { o.flipped() } else { o })
    }

    pub fn feeder_of(&self, to: &Port) -> Option<&Link> {
        self.links.iter().find(|l| &l.to == to)
    }

    pub fn consumer_of(&self, from: &Port) -> Option<&Link> {
        self.links.iter().find(|l| &l.from == from)
    }

    /// Adds a board of the given kind and type; the type is checked against
    /// the kind where the kind determines it.
    pub fn add_board(&mut self, kind: BoardKind, ty: TypeExpr) -> Result<BoardId, GraphError> {
        let id = BoardId::fresh();
        if matches!(kind, BoardKind::Shell) {
            return Err(GraphError::BoardTypeError {
                board: id,
                detail: "the shell is created with the construction".to_string(),
            });
        }
        if let Some(expected) = kind.expected_type() {
            if expected != ty {
                return Err(GraphError::BoardTypeError {
                    board: id,
                    detail: format!(
                        "kind {} requires type {}, got {}",
                        kind.kind_string(),
                        format_type(&expected),
                        format_type(&ty)
                    ),
                });
            }
        } else {
            if !ty.well_formed() || !ty.is_arrow() || ty.arrow_inputs().is_empty() {
                return Err(GraphError::BoardTypeError {
                    board: id,
                    detail: format!(
                        "{} boards need an arrow type with at least one socket, got {}",
                        kind.kind_string(),
                        format_type(&ty)
                    ),
                });
            }
        }
        self.boards.insert(
            id,
            Board {
                id,
                layout: layout(&ty),
                kind,
            },
        );
        Ok(id)
    }

    pub(crate) fn insert_board(&mut self, board: Board) {
        self.boards.insert(board.id, board);
    }

    /// Inserts a link with no checking. Exists so tests can craft invalid
    /// graphs for the validator; everything else goes through `add_link`.
    #[doc(hidden)]
    pub fn add_link_unchecked(&mut self, from: Port, to: Port) {
        self.links.insert(Link { from, to });
    }

    /// Creates a directed link after checking endpoint resolution,
    /// orientation, occupancy, and acyclicity.
    pub fn add_link(&mut self, from: Port, to: Port) -> Result<(), GraphError> {
        let from_o = self.effective_orientation(&from)?;
        let to_o = self.effective_orientation(&to)?;
        if from_o != Orientation::Emitter {
            return Err(GraphError::OrientationError {
                detail: format!("{from} is not an emitter"),
                from,
                to,
            });
        }
        if to_o != Orientation::Receiver {
            return Err(GraphError::OrientationError {
                detail: format!("{to} is not a receiver"),
                from,
                to,
            });
        }
        if self.consumer_of(&from).is_some() {
            return Err(GraphError::PortOccupied {
                port: from,
                role: "out",
            });
        }
        if self.feeder_of(&to).is_some() {
            return Err(GraphError::PortOccupied { port: to, role: "in" });
        }
        if self.reaches(&to, &from) {
            return Err(GraphError::CycleError { from, to });
        }
        self.links.insert(Link { from, to });
        Ok(())
    }

    /// Dataflow successors of a receiver leaf within its own board.
    fn internal_successors(&self, receiver: &Port) -> Vec<Port> {
        if receiver.board == self.shell {
            return vec![];
        }
        let board = match self.boards.get(&receiver.board) {
            Some(b) => b,
            None => return vec![],
        };
        let role = classify_leaf(board.ty(), &receiver.path, Orientation::Receiver);
        board
            .layout
            .emitters()
            .filter(|leaf| {
                let e_role = classify_leaf(board.ty(), &leaf.path, Orientation::Emitter);
                match (role, e_role) {
                    (LeafRole::Pin, LeafRole::Pout) | (LeafRole::Pin, LeafRole::Req(_)) => true,
                    (LeafRole::Ret(_), LeafRole::Pout) => true,
                    (LeafRole::Ret(i), LeafRole::Req(j)) => i != j,
                    _ => false,
                }
            })
            .map(|leaf| Port::new(receiver.board, leaf.path.clone()))
            .collect()
    }

    /// True if dataflow starting at receiver `start` can reach the emitter
    /// `goal`, following internal board dependencies and links.
    fn reaches(&self, start: &Port, goal: &Port) -> bool {
        let mut seen: BTreeSet<Port> = BTreeSet::new();
        let mut stack = vec![start.clone()];
        while let Some(r) = stack.pop() {
            if !seen.insert(r.clone()) {
                continue;
            }
            for e in self.internal_successors(&r) {
                if &e == goal {
                    return true;
                }
                for link in self.links.iter().filter(|l| l.from == e) {
                    stack.push(link.to.clone());
                }
            }
        }
        false
    }

    /// Checks every construction invariant and reports all violations in
    /// deterministic order. An empty report means the construction is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for board in self.boards.values() {
            let ty = board.ty();
            let zero_in = ty.arrow_inputs().is_empty();
            match &board.kind {
                BoardKind::Numeral(_) => {
                    if ty != &TypeExpr::numeral_source() {
                        out.push(Violation::BoardType {
                            board: board.id,
                            detail: format!("numeral board must be () -> N, got {}", format_type(ty)),
                        });
                    }
                }
                BoardKind::Shell => {}
                _ => {
                    if !ty.is_arrow() || zero_in {
                        out.push(Violation::BoardType {
                            board: board.id,
                            detail: format!(
                                "only numeral boards may lack sockets, got {}",
                                format_type(ty)
                            ),
                        });
                    }
                }
            }
        }
        let mut resolved: Vec<&Link> = Vec::new();
        for link in &self.links {
            let mut ok = true;
            for port in [&link.from, &link.to] {
                match self.boards.get(&port.board) {
                    None => {
                        out.push(Violation::BadEndpoint {
                            link: link.clone(),
                            detail: format!("unknown board {}", port.board),
                        });
                        ok = false;
                    }
                    Some(b) => match port.path.resolve(b.ty()) {
                        Some(TypeExpr::Nat) => {}
                        Some(other) => {
                            out.push(Violation::TypeViolation {
                                link: link.clone(),
                                port: port.clone(),
                                found: format_type(other),
                            });
                            ok = false;
                        }
                        None => {
                            out.push(Violation::BadEndpoint {
                                link: link.clone(),
                                detail: format!("no leaf {} on board {}", port.path, port.board),
                            });
                            ok = false;
                        }
                    },
                }
            }
            if ok {
                let fo = self.effective_orientation(&link.from).unwrap();
                let to = self.effective_orientation(&link.to).unwrap();
                if fo != Orientation::Emitter || to != Orientation::Receiver {
                    out.push(Violation::OrientationViolation {
                        link: link.clone(),
                        detail: format!(
                            "must run emitter -> receiver, found {fo:?} -> {to:?}"
                        ),
                    });
                } else {
                    resolved.push(link);
                }
            }
        }
        let mut by_to: BTreeMap<&Port, usize> = BTreeMap::new();
        let mut by_from: BTreeMap<&Port, usize> = BTreeMap::new();
        for link in &resolved {
            *by_to.entry(&link.to).or_default() += 1;
            *by_from.entry(&link.from).or_default() += 1;
        }
        for (port, n) in by_to {
            if n > 1 {
                out.push(Violation::FanIn { port: port.clone() });
            }
        }
        for (port, n) in by_from {
            if n > 1 {
                out.push(Violation::FanOut { port: port.clone() });
            }
        }
        for link in &resolved {
            if self.reaches(&link.to, &link.from) {
                out.push(Violation::Cycle {
                    link: (*link).clone(),
                });
            }
        }
        out
    }

    /// Deterministic names for serialization, traces and DOT export: the
    /// shell is `b000`, remaining boards are numbered along a breadth-first
    /// walk of the link structure from the shell, in port order.
    pub fn canonical_names(&self) -> BTreeMap<BoardId, String> {
        let mut order: Vec<BoardId> = Vec::with_capacity(self.boards.len());
        let mut seen: BTreeSet<BoardId> = BTreeSet::new();
        let mut queue: VecDeque<BoardId> = VecDeque::new();
        queue.push_back(self.shell);
        seen.insert(self.shell);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            let mut neighbors: Vec<(PortPath, u8, BoardId)> = Vec::new();
            for link in &self.links {
                if link.from.board == id {
                    neighbors.push((link.from.path.clone(), 0, link.to.board));
                }
                if link.to.board == id {
                    neighbors.push((link.to.path.clone(), 1, link.from.board));
                }
            }
            neighbors.sort();
            for (_, _, other) in neighbors {
                if self.boards.contains_key(&other) && seen.insert(other) {
                    queue.push_back(other);
                }
            }
        }
        for id in self.boards.keys() {
            if seen.insert(*id) {
                order.push(*id);
            }
        }
        order
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, format!("b{i:03}")))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    format_version: String,
    name: String,
    interface_type: String,
    boards: Vec<BoardRec>,
    links: Vec<LinkRec>,
}

#[derive(Serialize, Deserialize)]
struct BoardRec {
    id: String,
    kind: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize, Deserialize)]
struct LinkRec {
    from: String,
    to: String,
}

#[derive(Clone, Debug, Error)]
#[error("{location}: {message}")]
pub struct DeserializeError {
    pub location: String,
    pub message: String,
}

impl Construction {
    /// Canonical serialized form: boards sorted by id, links sorted
    /// lexicographically, canonical board names. Serializing, reading back,
    /// and serializing again is byte-identical.
    pub fn serialize(&self) -> String {
        let names = self.canonical_names();
        let mut boards: Vec<BoardRec> = self
            .boards
            .values()
            .map(|b| BoardRec {
                id: names[&b.id].clone(),
                kind: b.kind.kind_string(),
                ty: format_type(b.ty()),
            })
            .collect();
        boards.sort_by(|a, b| a.id.cmp(&b.id));
        let mut links: Vec<LinkRec> = self
            .links
            .iter()
            .map(|l| LinkRec {
                from: format!("{}/{}", names[&l.from.board], l.from.path),
                to: format!("{}/{}", names[&l.to.board], l.to.path),
            })
            .collect();
        links.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        let doc = GraphDoc {
            format_version: "1".to_string(),
            name: self.name.clone().unwrap_or_default(),
            interface_type: format_type(self.interface_type()),
            boards,
            links,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
        text.push('\n');
        text
    }

    pub fn deserialize(text: &str) -> Result<Construction, DeserializeError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| DeserializeError {
            location: "document".to_string(),
            message: e.to_string(),
        })?;
        if doc.format_version != "1" {
            return Err(DeserializeError {
                location: "format_version".to_string(),
                message: format!("unsupported version {:?}", doc.format_version),
            });
        }
        let interface = parse_type(&doc.interface_type).map_err(|e| DeserializeError {
            location: "interface_type".to_string(),
            message: e.to_string(),
        })?;
        let name = if doc.name.is_empty() {
            None
        } else {
            Some(doc.name.as_str())
        };
        let mut c = new_construction(interface.clone(), name);
        let mut ids: BTreeMap<String, BoardId> = BTreeMap::new();
        let mut shell_seen = false;
        for (i, rec) in doc.boards.iter().enumerate() {
            let loc = format!("boards[{i}] (id {:?})", rec.id);
            if ids.contains_key(&rec.id) {
                return Err(DeserializeError {
                    location: loc,
                    message: "duplicate board id".to_string(),
                });
            }
            let kind = BoardKind::parse_kind(&rec.kind).map_err(|message| DeserializeError {
                location: loc.clone(),
                message,
            })?;
            let ty = parse_type(&rec.ty).map_err(|e| DeserializeError {
                location: loc.clone(),
                message: e.to_string(),
            })?;
            if matches!(kind, BoardKind::Shell) {
                if shell_seen {
                    return Err(DeserializeError {
                        location: loc,
                        message: "more than one shell".to_string(),
                    });
                }
                if ty != interface {
                    return Err(DeserializeError {
                        location: loc,
                        message: format!(
                            "shell type {} disagrees with interface_type {}",
                            format_type(&ty),
                            format_type(&interface)
                        ),
                    });
                }
                shell_seen = true;
                ids.insert(rec.id.clone(), c.shell_id());
            } else {
                let id = c.add_board(kind, ty).map_err(|e| DeserializeError {
                    location: loc.clone(),
                    message: e.to_string(),
                })?;
                ids.insert(rec.id.clone(), id);
            }
        }
        if !shell_seen {
            return Err(DeserializeError {
                location: "boards".to_string(),
                message: "no shell board".to_string(),
            });
        }
        for (i, rec) in doc.links.iter().enumerate() {
            let loc = format!("links[{i}] ({} -> {})", rec.from, rec.to);
            let parse_ref = |s: &str| -> Result<Port, DeserializeError> {
                let (board, path) = s.split_once('/').ok_or_else(|| DeserializeError {
                    location: loc.clone(),
                    message: format!("malformed port reference {s:?}"),
                })?;
                let id = ids.get(board).ok_or_else(|| DeserializeError {
                    location: loc.clone(),
                    message: format!("unknown board {board:?}"),
                })?;
                let path: PortPath = path.parse().map_err(|e: crate::types::TypeParseError| {
                    DeserializeError {
                        location: loc.clone(),
                        message: e.message,
                    }
                })?;
                Ok(Port::new(*id, path))
            };
            let from = parse_ref(&rec.from)?;
            let to = parse_ref(&rec.to)?;
            c.add_link(from, to).map_err(|e| DeserializeError {
                location: loc,
                message: e.to_string(),
            })?;
        }
        Ok(c)
    }

    /// Deterministic DOT rendering: boards as record nodes with one field
    /// per leaf port, links as edges between fields.
    pub fn to_dot(&self) -> String {
        let names = self.canonical_names();
        let mut by_name: Vec<(&String, &Board)> = self
            .boards
            .values()
            .map(|b| (&names[&b.id], b))
            .collect();
        by_name.sort_by_key(|(n, _)| (*n).clone());
        let mut out = String::new();
        out.push_str("digraph construction {\n  rankdir=LR;\n  node [shape=record];\n");
        for (name, board) in &by_name {
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for (i, leaf) in board.layout.leaf_ports.iter().enumerate() {
                let field = format!("<p{i}>{}", leaf.path);
                match leaf.path.head().map(|s| s.side) {
                    Some(Side::Input) => ins.push(field),
                    _ => outs.push(field),
                }
            }
            let mut label = String::new();
            if !ins.is_empty() {
                label.push_str(&format!("{{{}}}|", ins.join("|")));
            }
            label.push_str(&board.kind.label());
            if !outs.is_empty() {
                label.push_str(&format!("|{{{}}}", outs.join("|")));
            }
            out.push_str(&format!("  \"{name}\" [label=\"{{{label}}}\"];\n"));
        }
        let mut edges: Vec<String> = self
            .links
            .iter()
            .map(|l| {
                let fi = self.boards[&l.from.board]
                    .layout
                    .leaf_index(&l.from.path)
                    .expect("leaf");
                let ti = self.boards[&l.to.board]
                    .layout
                    .leaf_index(&l.to.path)
                    .expect("leaf");
                format!(
                    "  \"{}\":p{} -> \"{}\":p{};\n",
                    names[&l.from.board], fi, names[&l.to.board], ti
                )
            })
            .collect();
        edges.sort();
        for e in edges {
            out.push_str(&e);
        }
        out.push_str("}\n");
        out
    }
}

/// Node key for the net assembler: a real port in the result, or a leaf on
/// an embedded part's shell (these dissolve when the nets are materialized).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum NetNode {
    Real(Port),
    Boundary(usize, PortPath),
}

/// Builds a construction by embedding parts and aliasing their boundary
/// ports into nets; each net then materializes as at most one link. Shell
/// boundaries of embedded parts dissolve, which is what splices pure-wire
/// regions (e.g. composition gadgets) away.
pub(crate) struct Assembler {
    result: Construction,
    node_ix: BTreeMap<NetNode, usize>,
    parent: Vec<usize>,
    part_count: usize,
}

impl Assembler {
    pub fn new(interface: TypeExpr, name: Option<&str>) -> Assembler {
        Assembler {
            result: new_construction(interface, name),
            node_ix: BTreeMap::new(),
            parent: Vec::new(),
            part_count: 0,
        }
    }

    pub fn shell_node(&self, path: PortPath) -> NetNode {
        NetNode::Real(Port::new(self.result.shell_id(), path))
    }

    fn find(&mut self, node: NetNode) -> usize {
        let ix = match self.node_ix.get(&node) {
            Some(ix) => *ix,
            None => {
                let ix = self.parent.len();
                self.parent.push(ix);
                self.node_ix.insert(node, ix);
                ix
            }
        };
        let mut root = ix;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = ix;
        while self.parent[cur] != cur {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn alias(&mut self, a: NetNode, b: NetNode) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Copies every non-shell board of `part` into the result with fresh
    /// ids. Interior links are re-created directly (re-checking occupancy
    /// and acyclicity); links touching the part's shell become net aliases
    /// on boundary nodes of the returned handle.
    pub fn embed(&mut self, part: &Construction) -> Result<usize, GraphError> {
        let handle = self.part_count;
        self.part_count += 1;
        let mut remap: BTreeMap<BoardId, BoardId> = BTreeMap::new();
        for board in part.boards() {
            if board.id == part.shell_id() {
                continue;
            }
            let id = BoardId::fresh();
            remap.insert(board.id, id);
            self.result.insert_board(Board {
                id,
                layout: board.layout.clone(),
                kind: board.kind.clone(),
            });
        }
        for link in part.links() {
            let shell = part.shell_id();
            if link.from.board != shell && link.to.board != shell {
                self.result.add_link(
                    Port::new(remap[&link.from.board], link.from.path.clone()),
                    Port::new(remap[&link.to.board], link.to.path.clone()),
                )?;
            } else {
                let map_port = |p: &Port| -> NetNode {
                    if p.board == shell {
                        NetNode::Boundary(handle, p.path.clone())
                    } else {
                        NetNode::Real(Port::new(remap[&p.board], p.path.clone()))
                    }
                };
                let a = map_port(&link.from);
                let b = map_port(&link.to);
                self.alias(a, b);
            }
        }
        Ok(handle)
    }

    pub fn boundary(&self, part: usize, path: PortPath) -> NetNode {
        NetNode::Boundary(part, path)
    }

    /// Adds a standalone board to the result (e.g. a numeral source or a
    /// composite gadget board).
    pub fn add_board(&mut self, kind: BoardKind, ty: TypeExpr) -> Result<BoardId, GraphError> {
        self.result.add_board(kind, ty)
    }

    pub fn board_node(&self, board: BoardId, path: PortPath) -> NetNode {
        NetNode::Real(Port::new(board, path))
    }

    /// Resolves all nets into links. Every net may contain at most one real
    /// emitter and one real receiver; unmatched boundary ports dissolve.
    pub fn finish(mut self) -> Result<Construction, GraphError> {
        let mut classes: BTreeMap<usize, Vec<Port>> = BTreeMap::new();
        let nodes: Vec<NetNode> = self.node_ix.keys().cloned().collect();
        for node in nodes {
            let root = self.find(node.clone());
            if let NetNode::Real(port) = node {
                classes.entry(root).or_default().push(port);
            }
        }
        for (_, ports) in classes {
            let mut emitter: Option<Port> = None;
            let mut receiver: Option<Port> = None;
            for port in ports {
                match self.result.effective_orientation(&port)? {
                    Orientation::Emitter => {
                        if let Some(prev) = &emitter {
                            return Err(GraphError::Internal(format!(
                                "net with two emitters, {prev} and {port}"
                            )));
                        }
                        emitter = Some(port);
                    }
                    Orientation::Receiver => {
                        if let Some(prev) = &receiver {
                            return Err(GraphError::Internal(format!(
                                "net with two receivers, {prev} and {port}"
                            )));
                        }
                        receiver = Some(port);
                    }
                }
            }
            if let (Some(from), Some(to)) = (emitter, receiver) {
                self.result.add_link(from, to)?;
            }
        }
        Ok(self.result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{prim_add, prim_succ, PrimitiveKind};
    use crate::types::parse_type;

    fn two_board_pair() -> (Construction, BoardId, BoardId) {
        let mut c = new_construction(parse_type("N -> N").unwrap(), None);
        let f = c
            .add_board(BoardKind::Primitive(PrimitiveKind::Succ), TypeExpr::unary())
            .unwrap();
        let g = c
            .add_board(BoardKind::Primitive(PrimitiveKind::Succ), TypeExpr::unary())
            .unwrap();
        (c, f, g)
    }

    fn path(s: &str) -> PortPath {
        s.parse().unwrap()
    }

    #[test]
    fn shell_inner_face_is_flipped() {
        let c = new_construction(parse_type("N -> N").unwrap(), None);
        let shell = c.shell_id();
        assert_eq!(
            c.effective_orientation(&Port::new(shell, path("in.0"))).unwrap(),
            Orientation::Emitter
        );
        assert_eq!(
            c.effective_orientation(&Port::new(shell, path("out.0"))).unwrap(),
            Orientation::Receiver
        );
    }

    #[test]
    fn shell_face_counts() {
        let c = new_construction(parse_type("(N;N) -> N").unwrap(), None);
        let shell = c.shell_id();
        let emitters = c
            .interface_layout()
            .leaf_ports
            .iter()
            .filter(|p| {
                c.effective_orientation(&Port::new(shell, p.path.clone())).unwrap()
                    == Orientation::Emitter
            })
            .count();
        assert_eq!(emitters, 2);

        let hi = new_construction(parse_type("(N -> N) -> N").unwrap(), None);
        assert_eq!(hi.interface_layout().leaf_count(), 3);
        assert!(hi.validate().is_empty());
    }

    #[test]
    fn add_board_checks_kind_types() {
        let mut c = new_construction(parse_type("N -> N").unwrap(), None);
        let id = c
            .add_board(
                BoardKind::Numeral(4u32.into()),
                TypeExpr::numeral_source(),
            )
            .unwrap();
        assert_eq!(c.board(id).unwrap().ty(), &parse_type("() -> N").unwrap());
        let err = c
            .add_board(BoardKind::Numeral(4u32.into()), TypeExpr::unary())
            .unwrap_err();
        assert!(matches!(err, GraphError::BoardTypeError { .. }));
        let err = c
            .add_board(
                BoardKind::Composite("iter".into()),
                TypeExpr::numeral_source(),
            )
            .unwrap_err();
        assert!(matches!(err, GraphError::BoardTypeError { .. }));
    }

    #[test]
    fn add_link_happy_path_and_errors() {
        let (mut c, f, g) = two_board_pair();
        let shell = c.shell_id();
        c.add_link(Port::new(shell, path("in.0")), Port::new(f, path("in.0")))
            .unwrap();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .unwrap();
        c.add_link(Port::new(g, path("out.0")), Port::new(shell, path("out.0")))
            .unwrap();
        assert!(c.validate().is_empty());

        // socket -> socket is an orientation violation
        let (mut c2, f2, g2) = two_board_pair();
        let err = c2
            .add_link(Port::new(f2, path("in.0")), Port::new(g2, path("in.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::OrientationError { .. }));

        // unknown board
        let (mut c3, f3, _) = two_board_pair();
        let ghost = BoardId::fresh();
        let err = c3
            .add_link(Port::new(f3, path("out.0")), Port::new(ghost, path("in.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::UnknownBoard(_)));
    }

    #[test]
    fn add_link_rejects_occupied_ports() {
        let (mut c, f, g) = two_board_pair();
        let shell = c.shell_id();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .unwrap();
        let err = c
            .add_link(Port::new(shell, path("in.0")), Port::new(g, path("in.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::PortOccupied { role: "in", .. }));
        let err = c
            .add_link(Port::new(f, path("out.0")), Port::new(shell, path("out.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::PortOccupied { role: "out", .. }));
    }

    #[test]
    fn add_link_rejects_feedback_loops() {
        let (mut c, f, g) = two_board_pair();
        c.add_link(Port::new(f, path("out.0")), Port::new(g, path("in.0")))
            .unwrap();
        let err = c
            .add_link(Port::new(g, path("out.0")), Port::new(f, path("in.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::CycleError { .. }));
    }

    #[test]
    fn link_endpoint_must_be_a_leaf() {
        let mut c = new_construction(parse_type("(N -> N) -> N").unwrap(), None);
        let f = c
            .add_board(BoardKind::Primitive(PrimitiveKind::Succ), TypeExpr::unary())
            .unwrap();
        let shell = c.shell_id();
        // in.0 on the shell is the whole compound socket, not a N leaf.
        let err = c
            .add_link(Port::new(f, path("out.0")), Port::new(shell, path("in.0")))
            .unwrap_err();
        assert!(matches!(err, GraphError::TypeMismatch { .. }));
    }

    #[test]
    fn validate_reports_fan_in_and_cycles() {
        let (mut c, f, g) = two_board_pair();
        let shell = c.shell_id();
        c.add_link_unchecked(Port::new(f, path("out.0")), Port::new(g, path("in.0")));
        c.add_link_unchecked(Port::new(shell, path("in.0")), Port::new(g, path("in.0")));
        let violations = c.validate();
        assert!(violations.iter().any(|v| matches!(v, Violation::FanIn { .. })));

        let (mut c2, f2, g2) = two_board_pair();
        c2.add_link_unchecked(Port::new(f2, path("out.0")), Port::new(g2, path("in.0")));
        c2.add_link_unchecked(Port::new(g2, path("out.0")), Port::new(f2, path("in.0")));
        let violations = c2.validate();
        assert!(violations.iter().any(|v| matches!(v, Violation::Cycle { .. })));
    }

    #[test]
    fn validate_reports_orientation_and_endpoint_violations() {
        let (mut c, f, g) = two_board_pair();
        c.add_link_unchecked(Port::new(f, path("in.0")), Port::new(g, path("in.0")));
        let violations = c.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::OrientationViolation { .. })));

        let (mut c2, f2, _) = two_board_pair();
        let ghost = BoardId::fresh();
        c2.add_link_unchecked(Port::new(f2, path("out.0")), Port::new(ghost, path("in.0")));
        c2.add_link_unchecked(Port::new(f2, path("out.7")), Port::new(f2, path("in.0")));
        let violations = c2.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::BadEndpoint { .. })));
        assert_eq!(violations.len(), 2);
    }

    #[test]
    fn serialize_round_trip_is_canonical() {
        let c = prim_succ();
        let text = c.serialize();
        let back = Construction::deserialize(&text).unwrap();
        assert!(back.validate().is_empty());
        assert_eq!(back.serialize(), text);
        assert_eq!(back.board_count(), c.board_count());
        assert_eq!(back.link_count(), c.link_count());
    }

    #[test]
    fn deserialize_names_the_corrupt_record() {
        let mut text = prim_add().serialize();
        text = text.replace("\"b001/in.0\"", "\"b009/in.0\"");
        let err = Construction::deserialize(&text).unwrap_err();
        assert!(err.location.starts_with("links["), "{err}");
        assert!(err.message.contains("b009"), "{err}");
    }

    #[test]
    fn dot_export_lists_boards_and_edges() {
        let mut c = new_construction(parse_type("N -> N").unwrap(), None);
        c.add_board(BoardKind::Primitive(PrimitiveKind::Succ), TypeExpr::unary())
            .unwrap();
        let dot = c.to_dot();
        assert_eq!(dot.matches("[label=").count(), 2); // shell + succ, no edges
        assert_eq!(dot.matches(" -> ").count(), 0);
        assert_eq!(c.to_dot(), dot);
    }
}
