//! Scalar-function language: parser, printer, evaluator to jets and a
//! symbolic derivative used to build family templates.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' int)?
//! base   := number | 'i' | ident | '(' expr ')' | func '(' expr ')'
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result, Span};
use crate::jet::{Jet, Mode, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        match s {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Imag,
    Param(String),
    /// Variable slot (0..4 are the coordinates, 4 is the implicit unknown) and its printed name.
    Coord(usize, String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    /// Source location of the wrapped node, kept for error reports.
    Spanned(Span, Box<Expr>),
}

pub const COORD_NAMES: [&str; 4] = ["q", "p", "x", "y"];
/// Slot index of the unknown in implicit equations.
pub const AUX_SLOT: usize = 4;

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub mode: Mode,
    pub coords: Vec<(String, usize)>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions::with_coords(Mode::Complex, &COORD_NAMES)
    }
}

impl ParseOptions {
    pub fn with_coords(mode: Mode, names: &[&str]) -> Self {
        ParseOptions {
            mode,
            coords: names.iter().enumerate().map(|(i, n)| (n.to_string(), i)).collect(),
        }
    }
}

/// Parses with the default coordinate names (q,p,x,y) in complex mode.
pub fn parse(src: &str) -> Result<Expr> {
    parse_with(src, &ParseOptions::default())
}

pub fn parse_with(src: &str, opts: &ParseOptions) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, opts, depth: 0, len: src.len() };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.error("unexpected trailing input")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
            let start = off;
            let mut j = i;
            let mut integral = true;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && chars[j].1 == '.' {
                integral = false;
                j += 1;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j].1 == 'e' || chars[j].1 == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k].1 == '+' || chars[k].1 == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].1.is_ascii_digit() {
                    integral = false;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let end = chars.get(j).map_or(src.len(), |(o, _)| *o);
            let v: f64 = src[start..end]
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: "malformed number".into() })?;
            out.push((Tok::Num(v, integral), start, end));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = off;
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let end = chars.get(j).map_or(src.len(), |(o, _)| *o);
            out.push((Tok::Ident(src[start..end].to_string()), start, end));
            i = j;
            continue;
        }
        if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), off, off + 1));
            i += 1;
            continue;
        }
        return Err(Error::Syntax { offset: off, message: format!("unexpected character `{c}`") });
    }
    out.push((Tok::End, src.len(), src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    opts: &'a ParseOptions,
    depth: usize,
    len: usize,
}

const MAX_DEPTH: usize = 200;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].2
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: &str) -> Error {
        Error::Syntax { offset: self.offset(), message: msg.to_string() }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let start = self.offset();
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            if op == BinOp::Div {
                lhs = Expr::Spanned(Span { start, end: self.prev_end() }, Box::new(lhs));
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        self.enter()?;
        let out = if let Tok::Sym('-') = self.peek() {
            self.bump();
            Expr::Neg(Box::new(self.factor()?))
        } else {
            let start = self.offset();
            let base = self.base()?;
            if let Tok::Sym('^') = self.peek() {
                self.bump();
                let neg = if let Tok::Sym('-') = self.peek() {
                    self.bump();
                    true
                } else {
                    false
                };
                let off = self.offset();
                let n = match self.bump() {
                    Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
                    Tok::Num(..) | Tok::Sym('(') | Tok::Ident(_) => {
                        return Err(Error::NonIntegerExponent { offset: off })
                    }
                    _ => return Err(Error::Syntax { offset: off, message: "expected integer exponent".into() }),
                };
                if let Tok::Sym('^') = self.peek() {
                    return Err(self.error("chained exponent needs parentheses"));
                }
                let n = if neg { -n } else { n };
                let pow = Expr::Pow(Box::new(base), n);
                if n < 0 {
                    Expr::Spanned(Span { start, end: self.prev_end() }, Box::new(pow))
                } else {
                    pow
                }
            } else {
                base
            }
        };
        self.depth -= 1;
        Ok(out)
    }

    fn base(&mut self) -> Result<Expr> {
        let start = self.offset();
        match self.bump() {
            Tok::Num(v, _) => Ok(Expr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                match self.bump() {
                    Tok::Sym(')') => Ok(e),
                    _ => Err(Error::Syntax { offset: self.prev_end(), message: "expected `)`".into() }),
                }
            }
            Tok::Ident(name) => {
                if let Tok::Sym('(') = self.peek() {
                    let f = Func::from_name(&name).ok_or(Error::UnknownFunction { name: name.clone(), offset: start })?;
                    self.bump();
                    let arg = self.expr()?;
                    match self.bump() {
                        Tok::Sym(')') => {}
                        _ => return Err(Error::Syntax { offset: self.prev_end(), message: "expected `)`".into() }),
                    }
                    let call = Expr::Call(f, Box::new(arg));
                    return Ok(if f == Func::Ln {
                        Expr::Spanned(Span { start, end: self.prev_end() }, Box::new(call))
                    } else {
                        call
                    });
                }
                if Func::from_name(&name).is_some() {
                    return Err(Error::Syntax { offset: start, message: format!("`{name}` needs an argument") });
                }
                if name == "i" {
                    return match self.opts.mode {
                        Mode::Complex => Ok(Expr::Imag),
                        Mode::Real => {
                            Err(Error::Syntax { offset: start, message: "imaginary unit is not allowed in real mode".into() })
                        }
                    };
                }
                if let Some((n, s)) = self.opts.coords.iter().find(|(n, _)| *n == name) {
                    return Ok(Expr::Coord(*s, n.clone()));
                }
                Ok(Expr::Param(name))
            }
            Tok::End => Err(Error::Syntax { offset: start, message: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(Error::Syntax { offset: start, message: format!("unexpected `{c}`") }),
        }
    }
}

// ---------------------------------------------------------------- printing

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
        Expr::Spanned(_, inner) => level(inner),
        _ => 5,
    }
}

fn write_expr(e: &Expr, min: u8, out: &mut String) {
    let lv = level(e);
    let paren = lv < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Num(v) => {
            if v.is_sign_negative() {
                out.push('-');
                out.push_str(&format!("{}", -v));
            } else {
                out.push_str(&format!("{v}"));
            }
        }
        Expr::Imag => out.push('i'),
        Expr::Param(n) | Expr::Coord(_, n) => out.push_str(n),
        Expr::Neg(a) => {
            out.push('-');
            write_expr(a, 3, out);
        }
        Expr::Bin(op, a, b) => {
            let (sym, l, r) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
            };
            write_expr(a, l, out);
            out.push_str(sym);
            write_expr(b, r, out);
        }
        Expr::Pow(a, n) => {
            write_expr(a, 5, out);
            out.push_str(&format!("^{n}"));
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, 0, out);
            out.push(')');
        }
        Expr::Spanned(_, a) => write_expr(a, min, out),
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, 0, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------- construction

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        Expr::Spanned(_, a) => as_num(a),
        _ => None,
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn coord(slot: usize, name: &str) -> Expr {
        Expr::Coord(slot, name.to_string())
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn is_zero(&self) -> bool {
        as_num(self) == Some(0.0)
    }

    pub fn powi(self, n: i32) -> Expr {
        match (n, as_num(&self)) {
            (0, _) => Expr::Num(1.0),
            (1, _) => self,
            (_, Some(v)) if n > 0 => Expr::Num(v.powi(n)),
            _ => Expr::Pow(Box::new(self), n),
        }
    }

    pub fn exp(self) -> Expr {
        Expr::Call(Func::Exp, Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Call(Func::Ln, Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Call(Func::Sin, Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Call(Func::Cos, Box::new(self))
    }

    /// Removes source-location wrappers; two trees parsed from equivalent
    /// text compare equal after this.
    pub fn strip_spans(&self) -> Expr {
        match self {
            Expr::Spanned(_, a) => a.strip_spans(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.strip_spans())),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.strip_spans()), Box::new(b.strip_spans())),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.strip_spans()), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.strip_spans())),
            other => other.clone(),
        }
    }

    /// Coordinate slots referenced anywhere in the tree.
    pub fn coords_used(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Coord(k, _) = e {
                s.insert(*k);
            }
        });
        s
    }

    pub fn params_used(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(n) = e {
                s.insert(n.clone());
            }
        });
        s
    }

    pub fn uses_imag(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Imag));
        found
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) | Expr::Spanned(_, a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Replaces every occurrence of coordinate `slot` by `with`.
    pub fn substitute(&self, slot: usize, with: &Expr) -> Expr {
        match self {
            Expr::Coord(k, _) if *k == slot => with.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(slot, with))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.substitute(slot, with)), Box::new(b.substitute(slot, with))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute(slot, with)), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(slot, with))),
            Expr::Spanned(s, a) => Expr::Spanned(*s, Box::new(a.substitute(slot, with))),
            other => other.clone(),
        }
    }

    /// Replaces named parameters by other expressions.
    pub fn substitute_param(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Param(n) if n == name => with.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute_param(name, with))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute_param(name, with)), Box::new(b.substitute_param(name, with)))
            }
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute_param(name, with)), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute_param(name, with))),
            Expr::Spanned(s, a) => Expr::Spanned(*s, Box::new(a.substitute_param(name, with))),
            other => other.clone(),
        }
    }

    /// Symbolic partial derivative with respect to variable `slot`.
    pub fn diff(&self, slot: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Imag | Expr::Param(_) => Expr::Num(0.0),
            Expr::Coord(k, _) => Expr::Num(if *k == slot { 1.0 } else { 0.0 }),
            Expr::Neg(a) => -a.diff(slot),
            Expr::Spanned(_, a) => a.diff(slot),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.diff(slot), b.diff(slot));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => da + db,
                    BinOp::Sub => da - db,
                    BinOp::Mul => da * b.clone() + a * db,
                    BinOp::Div => da / b.clone() - a * db / b.powi(2),
                }
            }
            Expr::Pow(a, n) => {
                let da = a.diff(slot);
                if da.is_zero() {
                    return Expr::Num(0.0);
                }
                Expr::Num(*n as f64) * (**a).clone().powi(n - 1) * da
            }
            Expr::Call(f, a) => {
                let da = a.diff(slot);
                if da.is_zero() {
                    return Expr::Num(0.0);
                }
                let a = (**a).clone();
                match f {
                    Func::Exp => a.exp() * da,
                    Func::Ln => da / a,
                    Func::Sin => a.cos() * da,
                    Func::Cos => -(a.sin() * da),
                }
            }
        }
    }

    /// Repeated derivative, e.g. `d(&[1, 1])` for ∂²/∂p².
    pub fn d(&self, slots: &[usize]) -> Expr {
        slots.iter().fold(self.clone(), |e, &s| e.diff(s))
    }

    /// Evaluates to a jet given jets for every variable slot used.
    pub fn eval(&self, vars: &[Jet], params: &BTreeMap<String, Scalar>, mode: Mode) -> Result<Jet> {
        Ok(match self {
            Expr::Num(v) => Jet::real(mode, *v),
            Expr::Imag => match mode {
                Mode::Complex => Jet::constant(mode, Scalar::new(0.0, 1.0)),
                Mode::Real => return Err(Error::ImaginaryInRealMode),
            },
            Expr::Param(n) => {
                let v = params.get(n).ok_or_else(|| Error::UnboundParameter(n.clone()))?;
                if mode == Mode::Real && v.im != 0.0 {
                    return Err(Error::ImaginaryInRealMode);
                }
                Jet::constant(mode, *v)
            }
            Expr::Coord(k, _) => vars.get(*k).cloned().ok_or(Error::VarOutOfRange(*k))?,
            Expr::Neg(a) => a.eval(vars, params, mode)?.neg(),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(vars, params, mode)?, b.eval(vars, params, mode)?);
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b)?,
                }
            }
            Expr::Pow(a, n) => a.eval(vars, params, mode)?.powi(*n)?,
            Expr::Call(f, a) => {
                let a = a.eval(vars, params, mode)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln()?,
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
            Expr::Spanned(span, a) => a.eval(vars, params, mode).map_err(|e| tag(e, *span))?,
        })
    }
}

fn tag(e: Error, span: Span) -> Error {
    match e {
        Error::DivisionNearZero { span: None } => Error::DivisionNearZero { span: Some(span) },
        Error::LogOfZero { span: None } => Error::LogOfZero { span: Some(span) },
        Error::LogOfNegative { span: None } => Error::LogOfNegative { span: Some(span) },
        other => other,
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (as_num(&self), as_num(&rhs)) {
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            (Some(a), Some(b)) => Expr::Num(a + b),
            _ => Expr::Bin(BinOp::Add, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (as_num(&self), as_num(&rhs)) {
            (_, Some(0.0)) => self,
            (Some(0.0), _) => -rhs,
            (Some(a), Some(b)) => Expr::Num(a - b),
            _ => Expr::Bin(BinOp::Sub, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (as_num(&self), as_num(&rhs)) {
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            (Some(a), Some(b)) => Expr::Num(a * b),
            _ => Expr::Bin(BinOp::Mul, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (as_num(&self), as_num(&rhs)) {
            (Some(0.0), _) => Expr::Num(0.0),
            (_, Some(1.0)) => self,
            _ => Expr::Bin(BinOp::Div, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(0.0) => Expr::Num(0.0),
            Expr::Neg(a) => *a,
            other => Expr::Neg(Box::new(other)),
        }
    }
}

impl Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Num(self) * rhs
    }
}

impl Add<Expr> for f64 {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Num(self) + rhs
    }
}

// ---------------------------------------------------------------- fields

/// A fully bound expression in the coordinates (q,p,x,y).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub expr: Expr,
    pub params: BTreeMap<String, Scalar>,
    pub mode: Mode,
}

impl ScalarField {
    pub fn new(expr: Expr, params: BTreeMap<String, Scalar>, mode: Mode) -> Result<Self> {
        for name in expr.params_used() {
            let v = params.get(&name).ok_or_else(|| Error::UnboundParameter(name.clone()))?;
            if mode == Mode::Real && v.im != 0.0 {
                return Err(Error::ImaginaryInRealMode);
            }
        }
        if mode == Mode::Real && expr.uses_imag() {
            return Err(Error::ImaginaryInRealMode);
        }
        Ok(ScalarField { expr, params, mode })
    }

    pub fn parse(src: &str, params: BTreeMap<String, Scalar>, mode: Mode) -> Result<Self> {
        let expr = parse_with(src, &ParseOptions::with_coords(mode, &COORD_NAMES))?;
        ScalarField::new(expr, params, mode)
    }

    pub fn eval_jet(&self, point: &[Scalar; 4]) -> Result<Jet> {
        let seeds = Jet::seeds(self.mode, point);
        self.expr.eval(&seeds, &self.params, self.mode)
    }

    pub fn eval_with(&self, vars: &[Jet]) -> Result<Jet> {
        self.expr.eval(vars, &self.params, self.mode)
    }
}

/// Evaluates the fully bound `expr` at `point`.
pub fn eval_jet(f: &ScalarField, point: &[Scalar; 4]) -> Result<Jet> {
    f.eval_jet(point)
}

/// u(q,p,x,y) defined implicitly by F(q,p,x,y,u) = 0, with u in slot
/// [`AUX_SLOT`]. The value is found per point by safeguarded Newton (with
/// bisection when `bracket` straddles a sign change in real mode), then the
/// jet of u by Newton iteration in jet arithmetic, which doubles the number
/// of correct orders per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitField {
    pub equation: ScalarField,
    /// F_u, built symbolically once.
    pub slope: ScalarField,
    pub bracket: (f64, f64),
}

const IMPLICIT_TOL: f64 = 1e-13;
const IMPLICIT_ITERS: usize = 60;

impl ImplicitField {
    pub fn new(equation: ScalarField, bracket: (f64, f64)) -> Self {
        let slope = ScalarField { expr: equation.expr.diff(AUX_SLOT), ..equation.clone() };
        ImplicitField { equation, slope, bracket }
    }

    /// Parses F with coordinate names `coords` and the unknown called `unknown`.
    pub fn parse(
        src: &str,
        coords: &[&str],
        unknown: &str,
        params: BTreeMap<String, Scalar>,
        mode: Mode,
        bracket: (f64, f64),
    ) -> Result<Self> {
        let mut opts = ParseOptions::with_coords(mode, coords);
        opts.coords.push((unknown.to_string(), AUX_SLOT));
        let expr = parse_with(src, &opts)?;
        Ok(ImplicitField::new(ScalarField::new(expr, params, mode)?, bracket))
    }

    fn residual(&self, seeds: &[Jet; 4], u: Scalar) -> Result<(Scalar, Scalar)> {
        let mode = self.equation.mode;
        let vars = [seeds[0].clone(), seeds[1].clone(), seeds[2].clone(), seeds[3].clone(), Jet::constant(mode, u)];
        Ok((self.equation.eval_with(&vars)?.value(), self.slope.eval_with(&vars)?.value()))
    }

    /// The root u at `point`.
    pub fn solve_value(&self, point: &[Scalar; 4]) -> Result<Scalar> {
        let mode = self.equation.mode;
        let seeds = Jet::seeds(mode, point);
        let (lo, hi) = self.bracket;
        let mut bracket = None;
        if mode == Mode::Real {
            let (flo, _) = self.residual(&seeds, Scalar::new(lo, 0.0))?;
            let (fhi, _) = self.residual(&seeds, Scalar::new(hi, 0.0))?;
            if flo.re == 0.0 {
                return Ok(Scalar::new(lo, 0.0));
            }
            if fhi.re == 0.0 {
                return Ok(Scalar::new(hi, 0.0));
            }
            if flo.re.signum() != fhi.re.signum() {
                bracket = Some((lo, hi, flo.re.signum()));
            }
        }
        let mut u = Scalar::new(0.5 * (lo + hi), 0.0);
        for _ in 0..IMPLICIT_ITERS {
            let (f, fu) = self.residual(&seeds, u)?;
            let mut next = if fu.norm() > 0.0 { u - f / fu } else { Scalar::new(f64::NAN, 0.0) };
            if let Some((a, b, sa)) = bracket.as_mut() {
                // keep the bracket valid and fall back to bisection when
                // Newton leaves it
                if f.re.signum() == *sa {
                    *a = u.re;
                } else {
                    *b = u.re;
                }
                let (l, h) = if *a < *b { (*a, *b) } else { (*b, *a) };
                if !(next.re > l && next.re < h) {
                    next = Scalar::new(0.5 * (*a + *b), 0.0);
                }
            }
            if !next.re.is_finite() || !next.im.is_finite() {
                return Err(Error::ImplicitSolveFailed);
            }
            let step = (next - u).norm();
            u = next;
            if step <= IMPLICIT_TOL * (1.0 + u.norm()) {
                let (f, fu) = self.residual(&seeds, u)?;
                if fu.norm() <= 1e-10 * (1.0 + f.norm()) {
                    return Err(Error::SingularSampling);
                }
                // one polishing step past the stopping test
                return Ok(u - f / fu);
            }
        }
        Err(Error::ImplicitSolveFailed)
    }

    /// Jet of u at `point` to full order.
    pub fn eval_jet(&self, point: &[Scalar; 4]) -> Result<Jet> {
        let mode = self.equation.mode;
        let seeds = Jet::seeds(mode, point);
        let mut u = Jet::constant(mode, self.solve_value(point)?);
        // orders known: 0 → 1 → 3
        for _ in 0..3 {
            let vars = [seeds[0].clone(), seeds[1].clone(), seeds[2].clone(), seeds[3].clone(), u.clone()];
            let f = self.equation.eval_with(&vars)?;
            let fu = self.slope.eval_with(&vars)?;
            u = u.sub(&f.div(&fu)?);
        }
        Ok(u)
    }
}

/// A scalar function given explicitly or implicitly.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Explicit(ScalarField),
    Implicit(ImplicitField),
}

impl Field {
    pub fn constant(mode: Mode, v: Scalar) -> Field {
        let expr = match (v.re, v.im) {
            (re, 0.0) => Expr::Num(re),
            (re, im) => Expr::Num(re) + Expr::Num(im) * Expr::Imag,
        };
        Field::Explicit(ScalarField { expr, params: BTreeMap::new(), mode })
    }

    pub fn mode(&self) -> Mode {
        match self {
            Field::Explicit(f) => f.mode,
            Field::Implicit(f) => f.equation.mode,
        }
    }

    pub fn eval_jet(&self, point: &[Scalar; 4]) -> Result<Jet> {
        match self {
            Field::Explicit(f) => f.eval_jet(point),
            Field::Implicit(f) => f.eval_jet(point),
        }
    }
}

impl From<ScalarField> for Field {
    fn from(f: ScalarField) -> Self {
        Field::Explicit(f)
    }
}

impl From<ImplicitField> for Field {
    fn from(f: ImplicitField) -> Self {
        Field::Implicit(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::jet::MultiIndex;

    fn r(v: [f64; 4]) -> [Scalar; 4] {
        v.map(|x| Scalar::new(x, 0.0))
    }

    #[test]
    fn parameter_in_tree() {
        let e = parse("x^2 + L/2 * y^2").unwrap();
        assert!(e.params_used().contains("L"));
        assert_eq!(e.coords_used(), [2usize, 3].into_iter().collect());
    }

    #[test]
    fn alias_coordinate() {
        let opts = ParseOptions::with_coords(Mode::Complex, &["q", "p", "x", "z"]);
        let e = parse_with("exp(q*z)", &opts).unwrap();
        assert_eq!(
            e.strip_spans(),
            Expr::Call(
                Func::Exp,
                Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::coord(0, "q")), Box::new(Expr::coord(3, "z"))))
            )
        );
    }

    #[test]
    fn exponent_rules() {
        assert!(matches!(parse("x^(1/2)"), Err(Error::NonIntegerExponent { .. })));
        assert!(matches!(parse("x^2.5"), Err(Error::NonIntegerExponent { .. })));
        assert!(matches!(parse("x^2^3"), Err(Error::Syntax { .. })));
        assert!(parse("x^-2").is_ok());
        assert!(matches!(parse("foo(x)"), Err(Error::UnknownFunction { .. })));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::coord(2, "x")), 2))));
        let f = ScalarField::new(e, BTreeMap::new(), Mode::Real).unwrap();
        assert_eq!(f.eval_jet(&r([0.0, 0.0, 3.0, 0.0])).unwrap().value().re, -9.0);
    }

    #[test]
    fn imaginary_unit_depends_on_mode() {
        assert_eq!(parse("i").unwrap(), Expr::Imag);
        let real = ParseOptions::with_coords(Mode::Real, &COORD_NAMES);
        assert!(matches!(parse_with("1 + i", &real), Err(Error::Syntax { offset: 4, .. })));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("x + * y") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x $"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn eval_product() {
        let f = ScalarField::parse("q*y", BTreeMap::new(), Mode::Real).unwrap();
        let j = f.eval_jet(&r([2.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(j.value().re, 6.0);
        assert_eq!(j.d(0).re, 3.0);
        assert_eq!(j.d(3).re, 2.0);
        assert_eq!(j.partial(&MultiIndex([1, 0, 0, 1])).unwrap().re, 1.0);
    }

    #[test]
    fn unbound_parameter_rejected() {
        assert_eq!(
            ScalarField::parse("L*x", BTreeMap::new(), Mode::Real),
            Err(Error::UnboundParameter("L".into()))
        );
    }

    #[test]
    fn eval_error_is_tagged_with_span() {
        let f = ScalarField::parse("q + 1/x", BTreeMap::new(), Mode::Real).unwrap();
        match f.eval_jet(&r([1.0, 0.0, 0.0, 0.0])) {
            Err(Error::DivisionNearZero { span: Some(s) }) => assert_eq!((s.start, s.end), (4, 7)),
            other => panic!("{other:?}"),
        }
        let g = ScalarField::parse("ln(x)", BTreeMap::new(), Mode::Real).unwrap();
        assert!(matches!(g.eval_jet(&r([0.0; 4])), Err(Error::LogOfZero { span: Some(_) })));
    }

    #[test]
    fn printer_round_trip_examples() {
        for src in ["-x^2", "(-x)^2", "a - (b - c)", "a/(b*c)", "x^-2*exp(-q)", "2*-x", "--x", "(x^2)^3", "1e-7*q"] {
            let e = parse(src).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e.strip_spans(), again.strip_spans(), "{src} -> {e}");
        }
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let opts = ParseOptions::default();
        let e = parse_with("exp(q*p)*sin(x) + ln(2 + y^2)/x + x^-3*q", &opts).unwrap();
        let pt = r([0.3, -0.7, 1.2, 0.4]);
        let seeds = Jet::seeds(Mode::Real, &pt);
        let params = BTreeMap::new();
        let j = e.eval(&seeds, &params, Mode::Real).unwrap();
        for v in 0..4 {
            let dj = e.diff(v).eval(&seeds, &params, Mode::Real).unwrap();
            assert!((dj.value() - j.d(v)).norm() < 1e-13);
            let jd = j.deriv(v);
            for (a, b) in dj.coeffs().iter().zip(jd.coeffs()).take(15) {
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn substitution_replaces_slot() {
        let e = parse("q*y + y^2").unwrap();
        let s = e.substitute(3, &Expr::coord(AUX_SLOT, "u"));
        assert_eq!(s.coords_used(), [0usize, AUX_SLOT].into_iter().collect());
    }

    #[test]
    fn implicit_cubic_and_derivatives() {
        // u³ + u − x = 0 ⇒ u_x = 1/(3u² + 1), u_xx = −6u·u_x³
        let f = ImplicitField::parse("u^3 + u - x", &COORD_NAMES, "u", BTreeMap::new(), Mode::Real, (-5.0, 5.0)).unwrap();
        let pt = r([0.3, 0.1, 2.0, -0.4]);
        let j = f.eval_jet(&pt).unwrap();
        let u = j.value().re;
        assert!((u * u * u + u - 2.0).abs() < 1e-13);
        let ux = 1.0 / (3.0 * u * u + 1.0);
        assert!((j.partial(&MultiIndex::new([0, 0, 1, 0]).unwrap()).unwrap().re - ux).abs() < 1e-12);
        let uxx = -6.0 * u * ux.powi(3);
        assert!((j.partial(&MultiIndex::new([0, 0, 2, 0]).unwrap()).unwrap().re - uxx).abs() < 1e-11);
        let uxxx = j.partial(&MultiIndex::new([0, 0, 3, 0]).unwrap()).unwrap().re;
        let fd = crate::jet::finite_difference(
            &|p: &[Scalar; 4]| f.eval_jet(p).map(|j| j.value()),
            &pt,
            &MultiIndex::new([0, 0, 3, 0]).unwrap(),
            1e-4,
        )
        .unwrap();
        assert!((uxxx - fd.re).abs() < 1e-5 * (1.0 + uxxx.abs()), "{uxxx} vs {fd}");
    }

    #[test]
    fn implicit_without_sign_change_uses_newton() {
        let f = ImplicitField::parse("u^2 - y", &COORD_NAMES, "u", BTreeMap::new(), Mode::Real, (0.5, 3.0)).unwrap();
        let v = f.solve_value(&r([0.0, 0.0, 0.0, 4.0])).unwrap();
        assert!((v.re - 2.0).abs() < 1e-13, "{v}");
        let bad = ImplicitField::parse("u^2 + 1", &COORD_NAMES, "u", BTreeMap::new(), Mode::Real, (-1.0, 1.0)).unwrap();
        assert!(bad.solve_value(&r([0.0; 4])).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..50).prop_map(|n| Expr::Num(n as f64 / 4.0)),
            (0usize..4).prop_map(|k| Expr::coord(k, COORD_NAMES[k])),
            Just(Expr::param("a")),
        ];
        leaf.prop_recursive(5, 40, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), -3i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner, 0usize..4).prop_map(|(a, k)| {
                    Expr::Call([Func::Exp, Func::Ln, Func::Sin, Func::Cos][k], Box::new(a))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_fixed_point(e in arb_expr()) {
            let once = parse(&e.to_string()).unwrap().strip_spans();
            let twice = parse(&once.to_string()).unwrap().strip_spans();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.to_string(), twice.to_string());
        }

        #[test]
        fn printing_preserves_value(e in arb_expr(), v in proptest::collection::vec(0.2f64..1.5, 4)) {
            let pt = r([v[0], v[1], v[2], v[3]]);
            let params: BTreeMap<String, Scalar> = [("a".to_string(), Scalar::new(0.7, 0.0))].into();
            let seeds = Jet::seeds(Mode::Complex, &pt);
            let direct = e.eval(&seeds, &params, Mode::Complex);
            let reparsed = parse(&e.to_string()).unwrap().eval(&seeds, &params, Mode::Complex);
            match (direct, reparsed) {
                (Ok(a), Ok(b)) => {
                    let (a, b) = (a.value(), b.value());
                    if a.norm().is_finite() && a.norm() < 1e12 {
                        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()), "{} vs {}", a, b);
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|j| j.value()), b.map(|j| j.value())),
            }
        }

        #[test]
        fn random_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let src = String::from_utf8_lossy(&bytes);
            match parse(&src) {
                Ok(_) => {}
                Err(Error::Syntax { offset, .. }) | Err(Error::NonIntegerExponent { offset }) => prop_assert!(offset <= src.len()),
                Err(Error::UnknownFunction { offset, .. }) => prop_assert!(offset <= src.len()),
                Err(other) => prop_assert!(false, "unexpected {:?}", other),
            }
        }

        #[test]
        fn token_soup_never_panics(toks in proptest::collection::vec(0usize..14, 0..30)) {
            let table = ["q", "+", "-", "*", "/", "^", "(", ")", "2", "exp", "i", "1.5", " ", "^-"];
            let src: String = toks.iter().map(|&k| table[k]).collect();
            let _ = parse(&src);
            let _ = parse_with(&src, &ParseOptions::with_coords(Mode::Real, &COORD_NAMES));
        }

        #[test]
        fn jet_derivatives_match_finite_differences(e in arb_expr(), v in proptest::collection::vec(0.3f64..1.2, 4), k in 0usize..4) {
            let pt = r([v[0], v[1], v[2], v[3]]);
            let params: BTreeMap<String, Scalar> = [("a".to_string(), Scalar::new(0.7, 0.0))].into();
            let f = ScalarField::new(e, params, Mode::Complex).unwrap();
            let Ok(j) = f.eval_jet(&pt) else { return Ok(()); };
            prop_assume!(j.max_abs() < 1e6);
            let alpha = MultiIndex::unit(k);
            let g = |p: &[Scalar; 4]| f.eval_jet(p).map(|j| j.value());
            prop_assume!(crate::jet::check_margin(&g, &j, &pt, 0.05).is_ok());
            let rel = crate::jet::finite_diff_check(&|p: &[Scalar; 4]| f.eval_jet(p), &pt, &alpha, 1e-4);
            if let Ok(rel) = rel {
                prop_assert!(rel < 1e-5, "relative error {}", rel);
            }
        }
    }

}
