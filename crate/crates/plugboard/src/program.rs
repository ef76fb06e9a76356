//! The construction program language: parenthesized prefix expressions
//! bound to names, with a distinguished `main`. Programs build eagerly
//! into constructions; `iter` builds the gadget graph (unfolded later at
//! elaboration) while `rec` chains its stages at build time from a count
//! that must be concrete.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::eval::run_fast_big;
use crate::functionals::{
    apply, bind_input, build_ackermann, comp_gadget, compose_at, compose_direct, copy, iter_graph,
    recursor,
};
use crate::netgraph::Construction;
use crate::primitives::{prim_add, prim_const, prim_numeral, prim_proj, prim_succ, product};
use crate::types::{format_type, parse_type, TypeExpr};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Succ,
    Add,
    Ackermann,
    Ref(String),
    Const(BigUint),
    Proj(usize, usize),
    Numeral(BigUint),
    Compose(Box<Expr>, Box<Expr>),
    ComposeAt(Box<Expr>, usize, Box<Expr>, usize),
    Product(Box<Expr>, Box<Expr>),
    Apply(Box<Expr>, Box<Expr>),
    Comp(TypeExpr, TypeExpr, TypeExpr),
    Copy(Box<Expr>),
    Iter(Box<Expr>, Box<Expr>),
    Rec(TypeExpr, Box<Expr>, Box<Expr>, Box<Expr>),
    AckApplied(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug)]
pub struct Definition {
    pub name: String,
    pub expr: Expr,
    pub line: usize,
}

/// Named definitions in source order; identifiers must be defined before
/// use, which keeps references acyclic.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub defs: Vec<Definition>,
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("line {line}, col {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: duplicate definition `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: `{name}` is not defined (definitions precede use)")]
    Undefined { line: usize, name: String },
    #[error("line {line}: in `{name}`: {message}")]
    Build {
        line: usize,
        name: String,
        message: String,
    },
    #[error("program has no `main` definition")]
    NoMain,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: TokKind,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, ProgramError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut atom_start: Option<(usize, usize, String)> = None;
    let flush = |toks: &mut Vec<Tok>, atom: &mut Option<(usize, usize, String)>| {
        if let Some((l, c, s)) = atom.take() {
            toks.push(Tok {
                kind: TokKind::Atom(s),
                line: l,
                col: c,
            });
        }
    };
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '\n' => {
                flush(&mut toks, &mut atom_start);
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                flush(&mut toks, &mut atom_start);
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 1;
                        break;
                    }
                }
                continue;
            }
            c if c.is_whitespace() => flush(&mut toks, &mut atom_start),
            '(' => {
                flush(&mut toks, &mut atom_start);
                toks.push(Tok {
                    kind: TokKind::Open,
                    line,
                    col,
                });
            }
            ')' => {
                flush(&mut toks, &mut atom_start);
                toks.push(Tok {
                    kind: TokKind::Close,
                    line,
                    col,
                });
            }
            c => match &mut atom_start {
                Some((_, _, s)) => s.push(c),
                None => atom_start = Some((line, col, c.to_string())),
            },
        }
        col += 1;
    }
    flush(&mut toks, &mut atom_start);
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn err_at(&self, message: impl Into<String>) -> ProgramError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        ProgramError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_open(&mut self) -> Result<(), ProgramError> {
        match self.peek() {
            Some(TokKind::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_at("expected `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<(), ProgramError> {
        match self.peek() {
            Some(TokKind::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_at("expected `)`")),
        }
    }

    fn atom(&mut self) -> Result<String, ProgramError> {
        match self.next().map(|t| t.kind.clone()) {
            Some(TokKind::Atom(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_at("expected an atom"))
            }
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ProgramError> {
        let at = self.pos;
        let s = self.atom()?;
        s.parse().map_err(|_| {
            self.pos = at;
            self.err_at(format!("expected {what}, found {s:?}"))
        })
    }

    /// A type argument: `N` or one balanced parenthesized group, re-read
    /// through the type grammar.
    fn type_arg(&mut self) -> Result<TypeExpr, ProgramError> {
        let at = self.pos;
        let mut text = String::new();
        let mut depth = 0usize;
        loop {
            match self.next().map(|t| t.kind.clone()) {
                Some(TokKind::Open) => {
                    depth += 1;
                    text.push_str("( ");
                }
                Some(TokKind::Close) => {
                    if depth == 0 {
                        self.pos = at;
                        return Err(self.err_at("expected a type"));
                    }
                    depth -= 1;
                    text.push_str(") ");
                }
                Some(TokKind::Atom(s)) => {
                    text.push_str(&s);
                    text.push(' ');
                }
                None => {
                    self.pos = at;
                    return Err(self.err_at("expected a type"));
                }
            }
            if depth == 0 {
                break;
            }
        }
        parse_type(text.trim()).map_err(|e| {
            self.pos = at;
            self.err_at(format!("bad type {:?}: {}", text.trim(), e.message))
        })
    }

    fn expr(&mut self) -> Result<Expr, ProgramError> {
        match self.peek().cloned() {
            Some(TokKind::Atom(_)) => {
                let s = self.atom()?;
                Ok(match s.as_str() {
                    "succ" => Expr::Succ,
                    "add" => Expr::Add,
                    "ackermann" => Expr::Ackermann,
                    _ => Expr::Ref(s),
                })
            }
            Some(TokKind::Open) => {
                self.expect_open()?;
                let head = self.atom()?;
                let e = match head.as_str() {
                    "const" => Expr::Const(self.number("a numeral")?),
                    "proj" => {
                        let i = self.number("an index")?;
                        let k = self.number("an arity")?;
                        Expr::Proj(i, k)
                    }
                    "numeral" => Expr::Numeral(self.number("a numeral")?),
                    "compose" => Expr::Compose(Box::new(self.expr()?), Box::new(self.expr()?)),
                    "compose-at" => {
                        let e1 = self.expr()?;
                        let i = self.number("a plug index")?;
                        let e2 = self.expr()?;
                        let j = self.number("a socket index")?;
                        Expr::ComposeAt(Box::new(e1), i, Box::new(e2), j)
                    }
                    "product" => Expr::Product(Box::new(self.expr()?), Box::new(self.expr()?)),
                    "apply" => Expr::Apply(Box::new(self.expr()?), Box::new(self.expr()?)),
                    "comp" => {
                        let a = self.type_arg()?;
                        let b = self.type_arg()?;
                        let c = self.type_arg()?;
                        Expr::Comp(a, b, c)
                    }
                    "copy" => Expr::Copy(Box::new(self.expr()?)),
                    "iter" => Expr::Iter(Box::new(self.expr()?), Box::new(self.expr()?)),
                    "rec" => {
                        let t = self.type_arg()?;
                        let a = self.expr()?;
                        let c = self.expr()?;
                        let k = self.expr()?;
                        Expr::Rec(t, Box::new(a), Box::new(c), Box::new(k))
                    }
                    "ackermann" => {
                        Expr::AckApplied(Box::new(self.expr()?), Box::new(self.expr()?))
                    }
                    other => return Err(self.err_at(format!("unknown form `{other}`"))),
                };
                self.expect_close()?;
                Ok(e)
            }
            _ => Err(self.err_at("expected an expression")),
        }
    }
}

/// Parses a program: a sequence of `(define <name> <expr>)` forms.
/// `#` starts a line comment.
pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut defs = Vec::new();
    while p.peek().is_some() {
        let line = p.toks[p.pos].line;
        p.expect_open()?;
        let head = p.atom()?;
        if head != "define" {
            p.pos -= 1;
            return Err(p.err_at(format!("expected `define`, found `{head}`")));
        }
        let name = p.atom()?;
        if matches!(
            name.as_str(),
            "succ" | "add" | "ackermann" | "define" | "numeral"
        ) {
            return Err(ProgramError::Parse {
                line,
                col: 1,
                message: format!("`{name}` is a reserved name"),
            });
        }
        let expr = p.expr()?;
        p.expect_close()?;
        defs.push(Definition { name, expr, line });
    }
    Ok(Program { defs })
}

/// A program with every definition built, in source order.
#[derive(Debug)]
pub struct BuiltProgram {
    pub defs: Vec<(String, Construction)>,
}

impl BuiltProgram {
    pub fn get(&self, name: &str) -> Option<&Construction> {
        self.defs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn main(&self) -> Result<&Construction, ProgramError> {
        self.get("main").ok_or(ProgramError::NoMain)
    }

    /// One `name : type` line per definition.
    pub fn type_report(&self) -> String {
        let mut out = String::new();
        for (name, c) in &self.defs {
            out.push_str(&format!("{name} : {}\n", format_type(c.interface_type())));
        }
        out
    }
}

struct Builder<'p> {
    built: Vec<(String, Construction)>,
    def: &'p Definition,
}

impl<'p> Builder<'p> {
    fn fail(&self, message: impl std::fmt::Display) -> ProgramError {
        ProgramError::Build {
            line: self.def.line,
            name: self.def.name.clone(),
            message: message.to_string(),
        }
    }

    fn nullary_nat(&mut self, e: &Expr, role: &str) -> Result<Construction, ProgramError> {
        let c = self.build(e)?;
        if !c.interface_type().arrow_inputs().is_empty()
            || c.interface_type().arrow_outputs() != [TypeExpr::Nat]
        {
            return Err(self.fail(format!(
                "{role} must be a nullary numeral source () -> N, found {}",
                format_type(c.interface_type())
            )));
        }
        Ok(c)
    }

    fn build(&mut self, e: &Expr) -> Result<Construction, ProgramError> {
        Ok(match e {
            Expr::Succ => prim_succ(),
            Expr::Add => prim_add(),
            Expr::Ackermann => build_ackermann(),
            Expr::Ref(name) => match self.built.iter().find(|(n, _)| n == name) {
                Some((_, c)) => c.clone(),
                None => {
                    return Err(ProgramError::Undefined {
                        line: self.def.line,
                        name: name.clone(),
                    })
                }
            },
            Expr::Const(k) => prim_const(k.clone()).map_err(|e| self.fail(e))?,
            Expr::Proj(i, k) => prim_proj(*i, *k).map_err(|e| self.fail(e))?,
            Expr::Numeral(k) => prim_numeral(k.clone()).map_err(|e| self.fail(e))?,
            Expr::Compose(a, b) => {
                let (a, b) = (self.build(a)?, self.build(b)?);
                compose_direct(&a, &b).map_err(|e| self.fail(e))?
            }
            Expr::ComposeAt(a, i, b, j) => {
                let (a, b) = (self.build(a)?, self.build(b)?);
                compose_at(&a, *i, &b, *j).map_err(|e| self.fail(e))?
            }
            Expr::Product(a, b) => {
                let (a, b) = (self.build(a)?, self.build(b)?);
                product(&a, &b).map_err(|e| self.fail(e))?
            }
            Expr::Apply(f, g) => {
                let (f, g) = (self.build(f)?, self.build(g)?);
                apply(&f, &g).map_err(|e| self.fail(e))?
            }
            Expr::Comp(a, b, c) => comp_gadget(a.clone(), b.clone(), c.clone()).construction,
            Expr::Copy(a) => {
                let a = self.build(a)?;
                let (original, duplicate) = copy(&a);
                product(&original, &duplicate).map_err(|e| self.fail(e))?
            }
            Expr::Iter(n, f) => {
                let n = self.nullary_nat(n, "iteration count")?;
                let f = self.build(f)?;
                iter_graph(&n, &f).map_err(|e| self.fail(e))?
            }
            Expr::Rec(item, a, c, k) => {
                let base = self.build(a)?;
                let steps = self.build(c)?;
                let count_src = self.nullary_nat(k, "recursion count")?;
                let count = run_fast_big(&count_src, &[])
                    .map_err(|e| self.fail(e))?
                    .pop()
                    .expect("one output");
                let count = count
                    .to_u64()
                    .ok_or_else(|| self.fail(format!("recursion count {count} too large")))?;
                let rec = recursor(item.clone());
                if steps.interface_type() != &rec.uncurried_step_type() {
                    return Err(self.fail(format!(
                        "rec step family must be {}, found {}",
                        format_type(&rec.uncurried_step_type()),
                        format_type(steps.interface_type())
                    )));
                }
                rec.elaborate_at(
                    &base,
                    |j| bind_input(&steps, 0, &prim_numeral(j.into()).expect("j >= 1")),
                    count,
                )
                .map_err(|e| self.fail(e))?
            }
            Expr::AckApplied(m, n) => {
                let m = self.nullary_nat(m, "ackermann level")?;
                let n = self.nullary_nat(n, "ackermann argument")?;
                let bound = bind_input(&build_ackermann(), 0, &m).map_err(|e| self.fail(e))?;
                bind_input(&bound, 0, &n).map_err(|e| self.fail(e))?
            }
        })
    }
}

/// Builds every definition in order.
pub fn build_program(p: &Program) -> Result<BuiltProgram, ProgramError> {
    let mut built: Vec<(String, Construction)> = Vec::new();
    for def in &p.defs {
        if built.iter().any(|(n, _)| n == &def.name) {
            return Err(ProgramError::Duplicate {
                line: def.line,
                name: def.name.clone(),
            });
        }
        let mut b = Builder {
            built: std::mem::take(&mut built),
            def,
        };
        let mut c = b.build(&def.expr)?;
        built = b.built;
        c.set_name(Some(&def.name));
        built.push((def.name.clone(), c));
    }
    Ok(BuiltProgram { defs: built })
}

/// Parse and build in one step.
pub fn load_program(text: &str) -> Result<BuiltProgram, ProgramError> {
    build_program(&parse_program(text)?)
}
