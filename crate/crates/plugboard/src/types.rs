//! The type algebra and the deterministic mapping from a type to a board
//! layout of oriented leaf ports.
//!
//! A type is rendered as a board: every `N` leaf becomes a port, and the
//! port's effective direction (emitter or receiver) is fixed by polarity —
//! each step into an arrow's input side flips the direction. A plain input
//! socket receives; the `A` inside an input-position `A -> B` emits.

use std::fmt;

use thiserror::Error;

/// A type expression. Arrow input/output lists are flat: `(N;N) -> N` is an
/// arrow with two sockets. `Product` groups ports *within* a single socket
/// and only survives nested inside another group, e.g. `((N;N);N) -> N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Nat,
    Product(Vec<TypeExpr>),
    Arrow {
        inputs: Vec<TypeExpr>,
        outputs: Vec<TypeExpr>,
    },
}

impl TypeExpr {
    /// Arrow constructor normalizing a lone product side to the flat port
    /// list, so `arrow([Product([N,N])], ..)` and `arrow([N,N], ..)` denote
    /// the same board face.
    pub fn arrow(inputs: Vec<TypeExpr>, outputs: Vec<TypeExpr>) -> TypeExpr {
        TypeExpr::Arrow {
            inputs: flatten_side(inputs),
            outputs: flatten_side(outputs),
        }
    }

    pub fn product(components: Vec<TypeExpr>) -> TypeExpr {
        assert!(!components.is_empty(), "empty product");
        if components.len() == 1 {
            components.into_iter().next().unwrap()
        } else {
            TypeExpr::Product(components)
        }
    }

    /// The type of a nullary numeral source, `() -> N`.
    pub fn numeral_source() -> TypeExpr {
        TypeExpr::Arrow {
            inputs: vec![],
            outputs: vec![TypeExpr::Nat],
        }
    }

    /// `N -> N`.
    pub fn unary() -> TypeExpr {
        TypeExpr::arrow(vec![TypeExpr::Nat], vec![TypeExpr::Nat])
    }

    pub fn is_arrow(&self) -> bool {
        matches!(self, TypeExpr::Arrow { .. })
    }

    /// True when no arrow occurs anywhere inside (a value shape: `N` or a
    /// product of value shapes).
    pub fn is_value_shape(&self) -> bool {
        match self {
            TypeExpr::Nat => true,
            TypeExpr::Product(xs) => xs.iter().all(|x| x.is_value_shape()),
            TypeExpr::Arrow { .. } => false,
        }
    }

    /// True for an arrow whose sockets and plugs are all value shapes.
    pub fn is_first_order(&self) -> bool {
        match self {
            TypeExpr::Arrow { inputs, outputs } => {
                inputs.iter().all(|t| t.is_value_shape())
                    && outputs.iter().all(|t| t.is_value_shape())
            }
            _ => false,
        }
    }

    /// Well-formedness: products have >= 2 components, arrows have >= 1
    /// output. Empty arrow inputs are permitted only for the nullary source
    /// form `() -> T` (numeral boards and constant-valued constructions).
    pub fn well_formed(&self) -> bool {
        match self {
            TypeExpr::Nat => true,
            TypeExpr::Product(xs) => xs.len() >= 2 && xs.iter().all(|x| x.well_formed()),
            TypeExpr::Arrow { inputs, outputs } => {
                !outputs.is_empty()
                    && inputs.iter().all(|x| x.well_formed())
                    && outputs.iter().all(|x| x.well_formed())
            }
        }
    }

    pub fn nat_leaf_count(&self) -> usize {
        match self {
            TypeExpr::Nat => 1,
            TypeExpr::Product(xs) => xs.iter().map(|x| x.nat_leaf_count()).sum(),
            TypeExpr::Arrow { inputs, outputs } => inputs
                .iter()
                .chain(outputs.iter())
                .map(|x| x.nat_leaf_count())
                .sum(),
        }
    }

    /// Arrow input list, empty for non-arrows.
    pub fn arrow_inputs(&self) -> &[TypeExpr] {
        match self {
            TypeExpr::Arrow { inputs, .. } => inputs,
            _ => &[],
        }
    }

    /// Arrow output list, empty for non-arrows.
    pub fn arrow_outputs(&self) -> &[TypeExpr] {
        match self {
            TypeExpr::Arrow { outputs, .. } => outputs,
            _ => &[],
        }
    }
}

/// The port list a type contributes when placed on an arrow side.
pub fn port_list(t: TypeExpr) -> Vec<TypeExpr> {
    match t {
        TypeExpr::Product(xs) => xs,
        other => vec![other],
    }
}

fn flatten_side(side: Vec<TypeExpr>) -> Vec<TypeExpr> {
    if side.len() == 1 {
        if let TypeExpr::Product(xs) = &side[0] {
            return xs.clone();
        }
    }
    side
}

/// Structural type equality (syntactic, no subtyping).
pub fn type_equal(a: &TypeExpr, b: &TypeExpr) -> bool {
    a == b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Input,
    Output,
}

/// One step of a port path: which side of the current node, and which
/// component. Arrow nodes use the side to pick the input or output list;
/// product components are addressed on the output side (products do not
/// flip polarity).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Selector {
    pub side: Side,
    pub index: usize,
}

impl Selector {
    pub fn input(index: usize) -> Selector {
        Selector {
            side: Side::Input,
            index,
        }
    }

    pub fn output(index: usize) -> Selector {
        Selector {
            side: Side::Output,
            index,
        }
    }
}

/// A path from a board's type to one of its `N` leaves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortPath(pub Vec<Selector>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    Emitter,
    Receiver,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Emitter => Orientation::Receiver,
            Orientation::Receiver => Orientation::Emitter,
        }
    }
}

impl PortPath {
    pub fn new(selectors: Vec<Selector>) -> PortPath {
        PortPath(selectors)
    }

    pub fn child(&self, sel: Selector) -> PortPath {
        let mut v = self.0.clone();
        v.push(sel);
        PortPath(v)
    }

    /// Orientation seen from outside the board: receiver iff the number of
    /// input-side selectors along the path is odd.
    pub fn orientation(&self) -> Orientation {
        let inputs = self.0.iter().filter(|s| s.side == Side::Input).count();
        if inputs % 2 == 1 {
            Orientation::Receiver
        } else {
            Orientation::Emitter
        }
    }

    /// Follows the path through the type; `Some(subtype)` if every selector
    /// resolves, whether or not the endpoint is a leaf.
    pub fn resolve<'t>(&self, ty: &'t TypeExpr) -> Option<&'t TypeExpr> {
        let mut cur = ty;
        for sel in &self.0 {
            cur = match cur {
                TypeExpr::Arrow { inputs, outputs } => match sel.side {
                    Side::Input => inputs.get(sel.index)?,
                    Side::Output => outputs.get(sel.index)?,
                },
                TypeExpr::Product(xs) => match sel.side {
                    Side::Output => xs.get(sel.index)?,
                    Side::Input => return None,
                },
                TypeExpr::Nat => return None,
            };
        }
        Some(cur)
    }

    /// True iff the path ends exactly at an `N` leaf of `ty`.
    pub fn is_leaf_of(&self, ty: &TypeExpr) -> bool {
        matches!(self.resolve(ty), Some(TypeExpr::Nat))
    }

    /// Index of the top-level side element this path enters, if any.
    pub fn head(&self) -> Option<Selector> {
        self.0.first().copied()
    }

    /// A copy with the first selector's index shifted by `delta` (used when
    /// concatenating board faces).
    pub fn with_head_offset(&self, delta: usize) -> PortPath {
        let mut v = self.0.clone();
        if let Some(first) = v.first_mut() {
            first.index += delta;
        }
        PortPath(v)
    }

    /// A copy with the given selector prepended.
    pub fn prefixed(&self, sel: Selector) -> PortPath {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(sel);
        v.extend(self.0.iter().copied());
        PortPath(v)
    }

    /// The remainder after stripping a leading selector, if it matches.
    pub fn strip_head(&self, sel: Selector) -> Option<PortPath> {
        if self.head() == Some(sel) {
            Some(PortPath(self.0[1..].to_vec()))
        } else {
            None
        }
    }
}

impl fmt::Display for PortPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sel) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            let side = match sel.side {
                Side::Input => "in",
                Side::Output => "out",
            };
            write!(f, "{}.{}", side, sel.index)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PortPath {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        if !parts.len().is_multiple_of(2) || parts.is_empty() {
            return Err(TypeParseError {
                offset: 0,
                message: format!("malformed port path {s:?}"),
            });
        }
        let mut sels = Vec::new();
        for pair in parts.chunks(2) {
            let side = match pair[0] {
                "in" => Side::Input,
                "out" => Side::Output,
                other => {
                    return Err(TypeParseError {
                        offset: 0,
                        message: format!("bad path side {other:?} in {s:?}"),
                    })
                }
            };
            let index = pair[1].parse::<usize>().map_err(|_| TypeParseError {
                offset: 0,
                message: format!("bad path index {:?} in {s:?}", pair[1]),
            })?;
            sels.push(Selector { side, index });
        }
        Ok(PortPath(sels))
    }
}

/// One leaf port of a board: its path and effective direction seen from
/// outside the board. Every leaf has base type `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafPort {
    pub path: PortPath,
    pub orientation: Orientation,
}

/// A type rendered as a panel of leaf ports in canonical depth-first order
/// (inputs before outputs at every level).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardLayout {
    pub board_type: TypeExpr,
    pub leaf_ports: Vec<LeafPort>,
}

impl BoardLayout {
    pub fn leaf_count(&self) -> usize {
        self.leaf_ports.len()
    }

    /// Position of a leaf path in the canonical enumeration.
    pub fn leaf_index(&self, path: &PortPath) -> Option<usize> {
        self.leaf_ports.iter().position(|p| &p.path == path)
    }

    pub fn emitters(&self) -> impl Iterator<Item = &LeafPort> {
        self.leaf_ports
            .iter()
            .filter(|p| p.orientation == Orientation::Emitter)
    }

    pub fn receivers(&self) -> impl Iterator<Item = &LeafPort> {
        self.leaf_ports
            .iter()
            .filter(|p| p.orientation == Orientation::Receiver)
    }
}

/// The canonical layout of a type.
pub fn layout(t: &TypeExpr) -> BoardLayout {
    let mut leaf_ports = Vec::new();
    collect_leaves(t, &PortPath::default(), &mut leaf_ports);
    BoardLayout {
        board_type: t.clone(),
        leaf_ports,
    }
}

fn collect_leaves(t: &TypeExpr, at: &PortPath, out: &mut Vec<LeafPort>) {
    match t {
        TypeExpr::Nat => out.push(LeafPort {
            path: at.clone(),
            orientation: at.orientation(),
        }),
        TypeExpr::Product(xs) => {
            for (i, x) in xs.iter().enumerate() {
                collect_leaves(x, &at.child(Selector::output(i)), out);
            }
        }
        TypeExpr::Arrow { inputs, outputs } => {
            for (i, x) in inputs.iter().enumerate() {
                collect_leaves(x, &at.child(Selector::input(i)), out);
            }
            for (i, x) in outputs.iter().enumerate() {
                collect_leaves(x, &at.child(Selector::output(i)), out);
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("type syntax error at byte {offset}: {message}")]
pub struct TypeParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses the type grammar `T ::= N | (T ; T ; ...) | T -> T` with `->`
/// right-associative and parentheses for grouping. A parenthesized
/// semicolon list on an arrow side is that side's port list; `()` denotes
/// the empty input face of a nullary source.
pub fn parse_type(text: &str) -> Result<TypeExpr, TypeParseError> {
    let mut p = TypeParser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let t = p.parse_arrow()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

struct TypeParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

/// An arrow side as parsed: either a single type or an explicit port list.
enum ParsedSide {
    One(TypeExpr),
    List(Vec<TypeExpr>),
}

impl<'a> TypeParser<'a> {
    fn err(&self, message: impl Into<String>) -> TypeParseError {
        TypeParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn parse_arrow(&mut self) -> Result<TypeExpr, TypeParseError> {
        let lhs = self.parse_side()?;
        if self.eat("->") {
            let rhs = self.parse_arrow()?;
            let inputs = match lhs {
                ParsedSide::One(t) => port_list(t),
                ParsedSide::List(xs) => xs,
            };
            let outputs = port_list(rhs);
            if outputs.is_empty() {
                return Err(self.err("arrow must have at least one output"));
            }
            Ok(TypeExpr::arrow(inputs, outputs))
        } else {
            match lhs {
                ParsedSide::One(t) => Ok(t),
                ParsedSide::List(xs) if xs.len() >= 2 => Ok(TypeExpr::Product(xs)),
                ParsedSide::List(_) => Err(self.err("empty group is only valid before ->")),
            }
        }
    }

    fn parse_side(&mut self) -> Result<ParsedSide, TypeParseError> {
        self.skip_ws();
        match self.bytes.get(self.pos) {
            Some(b'N') => {
                self.pos += 1;
                Ok(ParsedSide::One(TypeExpr::Nat))
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                if self.eat(")") {
                    return Ok(ParsedSide::List(vec![]));
                }
                let mut items = vec![self.parse_arrow()?];
                while self.eat(";") {
                    items.push(self.parse_arrow()?);
                }
                if !self.eat(")") {
                    return Err(self.err("expected `;` or `)`"));
                }
                if items.len() == 1 {
                    Ok(ParsedSide::One(items.pop().unwrap()))
                } else {
                    Ok(ParsedSide::List(items))
                }
            }
            Some(c) => Err(self.err(format!("unexpected byte {:?}", *c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Canonical text form: minimal parentheses, `->` right-associative.
pub fn format_type(t: &TypeExpr) -> String {
    let mut s = String::new();
    write_type(t, false, &mut s);
    s
}

fn write_type(t: &TypeExpr, arrow_lhs: bool, out: &mut String) {
    match t {
        TypeExpr::Nat => out.push('N'),
        TypeExpr::Product(xs) => write_group(xs, out),
        TypeExpr::Arrow { inputs, outputs } => {
            if arrow_lhs {
                out.push('(');
            }
            match inputs.len() {
                0 => out.push_str("()"),
                1 => write_type(&inputs[0], true, out),
                _ => write_group(inputs, out),
            }
            out.push_str(" -> ");
            match outputs.len() {
                1 => write_type(&outputs[0], false, out),
                _ => write_group(outputs, out),
            }
            if arrow_lhs {
                out.push(')');
            }
        }
    }
}

fn write_group(xs: &[TypeExpr], out: &mut String) {
    out.push('(');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        write_type(x, false, out);
    }
    out.push(')');
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_type(self))
    }
}
