//! Expression language of model files: parsing, printing, jet evaluation and
//! affine coordinate substitution.

use crate::jet::{Analytic, Jet, JetError};
use crate::scalar::Scalar;
use std::fmt;
use thiserror::Error;

/// Byte range into parsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {span}: {message}")]
    Syntax { message: String, span: SourceSpan },
    #[error("unknown function `{name}` at {span}")]
    UnknownFunction { name: String, span: SourceSpan },
    #[error("exponent must be an integer literal at {span}")]
    NonIntegerExponent { span: SourceSpan },
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("point has {got} entries for {expected} coordinates")]
    PointLength { expected: usize, got: usize },
    #[error("singular substitution matrix")]
    SingularMatrix,
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Analytic, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn coord(name: &str) -> Expr {
        Expr::Coord(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Parses with [`parse_expression`], panicking on error; for literals in code.
    pub fn parse(text: &str) -> Expr {
        parse_expression(text).unwrap_or_else(|e| panic!("bad expression {text:?}: {e}"))
    }

    /// `Some(c)` if the tree contains no coordinate reference and evaluates to `c`.
    pub fn as_constant(&self) -> Option<f64> {
        if self.mentions_any_coord() {
            return None;
        }
        eval_f64(self, &[], &[]).ok()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn mentions_any_coord(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Coord(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.mentions_any_coord(),
            Expr::Bin(_, a, b) => a.mentions_any_coord() || b.mentions_any_coord(),
        }
    }

    /// Names of all referenced coordinates, in first-occurrence order.
    pub fn coord_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_coords(&mut out);
        out
    }

    fn collect_coords(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Coord(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.collect_coords(out),
            Expr::Bin(_, a, b) => {
                a.collect_coords(out);
                b.collect_coords(out);
            }
        }
    }

    /// Sum of terms, skipping literal zeros; an empty sum is `0`.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter().filter(|t| !t.is_zero());
        match it.next() {
            None => Expr::Const(0.0),
            Some(first) => it.fold(first, |acc, t| Expr::bin(BinOp::Add, acc, t)),
        }
    }

    /// `c * self`, folding the trivial factors 0 and 1.
    pub fn scaled(self, c: f64) -> Expr {
        if c == 0.0 || self.is_zero() {
            Expr::Const(0.0)
        } else if c == 1.0 {
            self
        } else {
            Expr::bin(BinOp::Mul, Expr::Const(c), self)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(n) => write!(f, "{n}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, 3)
            }
            Expr::Bin(op, a, b) => {
                let (p, sym) = match op {
                    BinOp::Add => (1, " + "),
                    BinOp::Sub => (1, " - "),
                    BinOp::Mul => (2, "*"),
                    BinOp::Div => (2, "/"),
                };
                a.write_prec(f, p)?;
                write!(f, "{sym}")?;
                b.write_prec(f, p + 1)
            }
            Expr::Pow(a, k) => {
                a.write_prec(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Func(g, a) => {
                write!(f, "{}(", g.name())?;
                a.write_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, SourceSpan)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, SourceSpan)>, ExprError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let b = src.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i];
            let start = i;
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let single = match c {
                b'+' => Some(Tok::Plus),
                b'-' => Some(Tok::Minus),
                b'*' => Some(Tok::Star),
                b'/' => Some(Tok::Slash),
                b'^' => Some(Tok::Caret),
                b'(' => Some(Tok::LParen),
                b')' => Some(Tok::RParen),
                _ => None,
            };
            if let Some(t) = single {
                lx.push(t, start, i + 1);
                i += 1;
            } else if c.is_ascii_digit() || c == b'.' {
                let mut integral = true;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i < b.len() && b[i] == b'.' {
                    integral = false;
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    message: format!("malformed number `{text}`"),
                    span: SourceSpan { start, end: i },
                })?;
                lx.push(Tok::Num(v, integral), start, i);
            } else if c.is_ascii_alphabetic() {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                lx.push(Tok::Ident(src[start..i].to_string()), start, i);
            } else {
                let ch = src[start..].chars().next().unwrap();
                return Err(ExprError::Syntax {
                    message: format!("unexpected character `{ch}`"),
                    span: SourceSpan { start, end: start + ch.len_utf8() },
                });
            }
        }
        let n = lx.src.len();
        lx.push(Tok::End, n, n);
        Ok(lx.toks)
    }

    fn push(&mut self, t: Tok, start: usize, end: usize) {
        self.toks.push((t, SourceSpan { start, end }));
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        ExprError::Syntax { message: format!("expected {what}, found {found}"), span: self.span() }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    // Unary minus wraps a whole factor so that `^` binds tighter: -x^2 = -(x^2).
    fn factor(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let start = self.span().start;
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            (Tok::Num(v, true), sp) => {
                if v > i32::MAX as f64 {
                    return Err(ExprError::NonIntegerExponent { span: SourceSpan { start, end: sp.end } });
                }
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            (Tok::Num(_, false), sp) => {
                Err(ExprError::NonIntegerExponent { span: SourceSpan { start, end: sp.end } })
            }
            (_, sp) => Err(ExprError::NonIntegerExponent { span: SourceSpan { start, end: sp.end } }),
        }
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                let (_, sp) = self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Coord(name));
                }
                let f = Analytic::from_name(&name)
                    .ok_or(ExprError::UnknownFunction { name: name.clone(), span: sp })?;
                self.bump();
                let eof = self.toks[self.toks.len() - 1].1.start;
                let unclosed = |end: usize| ExprError::Syntax {
                    message: format!("unclosed call to `{name}`"),
                    span: SourceSpan { start: sp.start, end },
                };
                let arg = self.expr().map_err(|e| match e {
                    ExprError::Syntax { span, .. } if span.start == eof => unclosed(eof),
                    e => e,
                })?;
                if *self.peek() != Tok::RParen {
                    return Err(unclosed(self.span().end));
                }
                self.bump();
                Ok(Expr::Func(f, Box::new(arg)))
            }
            Tok::LParen => {
                let (_, sp) = self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    let end = self.span().end;
                    return Err(ExprError::Syntax {
                        message: "unclosed parenthesis".into(),
                        span: SourceSpan { start: sp.start, end },
                    });
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, name or `(`")),
        }
    }
}

/// Parses an expression under the model-file grammar.
pub fn parse_expression(text: &str) -> Result<Expr, ExprError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

fn coord_index(coords: &[String], name: &str) -> Result<usize, ExprError> {
    coords
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| ExprError::UnknownCoordinate(name.to_string()))
}

/// Taylor expansion of `expr` at `point` to total degree `order`.
pub fn eval_expr_jet<T: Scalar>(
    expr: &Expr,
    coords: &[String],
    point: &[T],
    order: usize,
) -> Result<Jet<T>, ExprError> {
    if point.len() != coords.len() {
        return Err(ExprError::PointLength { expected: coords.len(), got: point.len() });
    }
    eval_jet_rec(expr, coords, point, order)
}

fn eval_jet_rec<T: Scalar>(
    expr: &Expr,
    coords: &[String],
    point: &[T],
    order: usize,
) -> Result<Jet<T>, ExprError> {
    let n = coords.len().max(1);
    Ok(match expr {
        Expr::Const(c) => Jet::constant(n, order, T::lit(*c)),
        Expr::Coord(name) => {
            let i = coord_index(coords, name)?;
            Jet::variable(n, order, i, point[i])?
        }
        Expr::Neg(a) => -eval_jet_rec(a, coords, point, order)?,
        Expr::Bin(op, a, b) => {
            let a = eval_jet_rec(a, coords, point, order)?;
            let b = eval_jet_rec(b, coords, point, order)?;
            match op {
                BinOp::Add => a.checked_add(&b)?,
                BinOp::Sub => a.checked_sub(&b)?,
                BinOp::Mul => a.checked_mul(&b)?,
                BinOp::Div => a.checked_div(&b)?,
            }
        }
        Expr::Pow(a, k) => eval_jet_rec(a, coords, point, order)?.powi(*k)?,
        Expr::Func(f, a) => eval_jet_rec(a, coords, point, order)?.apply(*f)?,
    })
}

/// Plain floating-point evaluation, independent of the jet machinery.
pub fn eval_f64(expr: &Expr, coords: &[String], point: &[f64]) -> Result<f64, ExprError> {
    Ok(match expr {
        Expr::Const(c) => *c,
        Expr::Coord(name) => point[coord_index(coords, name)?],
        Expr::Neg(a) => -eval_f64(a, coords, point)?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval_f64(a, coords, point)?, eval_f64(b, coords, point)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(JetError::ZeroDivisor.into());
                    }
                    a / b
                }
            }
        }
        Expr::Pow(a, k) => {
            let a = eval_f64(a, coords, point)?;
            if *k < 0 && a == 0.0 {
                return Err(JetError::ZeroDivisor.into());
            }
            a.powi(*k)
        }
        Expr::Func(f, a) => {
            let a = eval_f64(a, coords, point)?;
            match f {
                Analytic::Log if a <= 0.0 => {
                    return Err(JetError::Domain { func: "log", value: a }.into())
                }
                Analytic::Sqrt if a < 0.0 => {
                    return Err(JetError::Domain { func: "sqrt", value: a }.into())
                }
                _ => f.eval(a),
            }
        }
    })
}

/// Replaces every coordinate `x_i` by `sum_j matrix[i][j] * y_j + offset[i]`, where
/// the new coordinates `y` reuse the names in `coords`.
pub fn substitute_linear(
    expr: &Expr,
    coords: &[String],
    matrix: &[Vec<f64>],
    offset: &[f64],
) -> Result<Expr, ExprError> {
    let n = coords.len();
    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) || offset.len() != n {
        return Err(ExprError::PointLength { expected: n, got: matrix.len() });
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || m.determinant().abs() <= 1e-14 * scale.powi(n as i32) {
        return Err(ExprError::SingularMatrix);
    }
    let images: Vec<Expr> = (0..n)
        .map(|i| {
            let mut terms: Vec<Expr> =
                (0..n).map(|j| Expr::coord(&coords[j]).scaled(matrix[i][j])).collect();
            terms.push(Expr::Const(offset[i]));
            Expr::sum(terms)
        })
        .collect();
    substitute(expr, coords, &images)
}

/// Replaces each coordinate by the matching expression of `images`.
pub fn substitute(expr: &Expr, coords: &[String], images: &[Expr]) -> Result<Expr, ExprError> {
    Ok(match expr {
        Expr::Const(c) => Expr::Const(*c),
        Expr::Coord(name) => images[coord_index(coords, name)?].clone(),
        Expr::Neg(a) => Expr::Neg(Box::new(substitute(a, coords, images)?)),
        Expr::Bin(op, a, b) => {
            Expr::bin(*op, substitute(a, coords, images)?, substitute(b, coords, images)?)
        }
        Expr::Pow(a, k) => Expr::Pow(Box::new(substitute(a, coords, images)?), *k),
        Expr::Func(f, a) => Expr::Func(*f, Box::new(substitute(a, coords, images)?)),
    })
}
