//! Expression language for scalar fields and one-dimensional profiles.
//!
//! Grammar (whitespace-insensitive, precedence high → low):
//!
//! ```text
//! atom   := number | x1..xn | r | s | ident '(' args ')' | '(' expr ')'
//! power  := atom ['^' power]            (right-associative)
//! unary  := '-' unary | power
//! term   := unary (('*'|'/') unary)*
//! expr   := term (('+'|'-') term)*
//! ```
//!
//! `r` is the radial symbol |x|; `s` is an alias for `x1` used by profile
//! definitions. Built-in functions: `exp`, `ln`, `abs`, `sqrt`, `pow(e, c)`,
//! `smoothstep(a, b, e)` (the cubic 3s²−2s³ ramp), `clampzero(e)` = max(e, 0),
//! `min(a, b)`, `max(a, b)`.
//!
//! Differentiation is symbolic and total: `abs`/`clampzero`/`min`/`max` use
//! the sign rule away from their kinks with derivative 0 at the kink itself
//! (the abs-at-zero convention), and `smoothstep` differentiates piecewise
//! with slope 6s−6s² strictly inside the ramp and 0 outside.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DslError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("`{name}` takes {expected} argument(s), got {got} (at byte {pos})")]
    Arity { pos: usize, name: String, expected: usize, got: usize },
    #[error("expression uses x{used} but the dimension is {dim}")]
    DimensionExceeded { used: usize, dim: usize },
    #[error("empty source")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnFn {
    Exp,
    Ln,
    Abs,
    Sqrt,
    Clampzero,
}

/// Expression AST. `Var(0)` is `x1`; `Radius` is |x|. `DirCos(i)` (xᵢ/|x|,
/// value 0 at the origin) and `StepPos` (indicator of a positive argument)
/// are internal nodes produced by differentiation, never by the parser.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Radius,
    DirCos(usize),
    StepPos(Arc<Expr>),
    Neg(Arc<Expr>),
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    Un(UnFn, Arc<Expr>),
    Smoothstep(Arc<Expr>, Arc<Expr>, Arc<Expr>),
    Min(Arc<Expr>, Arc<Expr>),
    Max(Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Arc<Expr> {
        Arc::new(Expr::Num(v))
    }

    pub fn var(i: usize) -> Arc<Expr> {
        Arc::new(Expr::Var(i))
    }

    pub fn bin(op: BinOp, a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        Arc::new(Expr::Bin(op, a, b))
    }

    pub fn un(f: UnFn, a: Arc<Expr>) -> Arc<Expr> {
        Arc::new(Expr::Un(f, a))
    }

    /// Largest variable index used, as a 1-based count (0 when none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Radius => 0,
            Expr::Var(i) | Expr::DirCos(i) => i + 1,
            Expr::Neg(a) | Expr::Un(_, a) | Expr::StepPos(a) => a.max_var(),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => a.max_var().max(b.max_var()),
            Expr::Smoothstep(a, b, c) => a.max_var().max(b.max_var()).max(c.max_var()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Radius => crate::vecn::norm(x),
            Expr::DirCos(i) => {
                let r = crate::vecn::norm(x);
                if r == 0.0 {
                    0.0
                } else {
                    x[*i] / r
                }
            }
            Expr::StepPos(a) => {
                if a.eval(x) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Neg(a) => -a.eval(x),
            Expr::Bin(op, a, b) => {
                let (u, v) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    // an exact-zero gate silences the other factor: piecewise
                    // derivatives gate deselected branches with 0, and a
                    // branch's singular point must not leak NaN through it
                    BinOp::Mul => {
                        if (u == 0.0 && v.is_nan()) || (v == 0.0 && u.is_nan()) {
                            0.0
                        } else {
                            u * v
                        }
                    }
                    BinOp::Div => u / v,
                    BinOp::Pow => u.powf(v),
                }
            }
            Expr::Un(f, a) => {
                let u = a.eval(x);
                match f {
                    UnFn::Exp => u.exp(),
                    UnFn::Ln => u.ln(),
                    UnFn::Abs => u.abs(),
                    UnFn::Sqrt => u.sqrt(),
                    UnFn::Clampzero => u.max(0.0),
                }
            }
            Expr::Smoothstep(a, b, e) => {
                let (lo, hi, v) = (a.eval(x), b.eval(x), e.eval(x));
                let s = (v - lo) / (hi - lo);
                if s <= 0.0 {
                    0.0
                } else if s >= 1.0 {
                    1.0
                } else {
                    s * s * (3.0 - 2.0 * s)
                }
            }
            Expr::Min(a, b) => a.eval(x).min(b.eval(x)),
            Expr::Max(a, b) => a.eval(x).max(b.eval(x)),
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn diff(&self, var: usize) -> Arc<Expr> {
        use BinOp::*;
        match self {
            Expr::Num(_) | Expr::StepPos(_) => Expr::num(0.0),
            Expr::Var(i) => Expr::num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Radius => Arc::new(Expr::DirCos(var)),
            // ∂_j (x_i/r) = δ_ij/r − x_i x_j/r³ (never used at the origin)
            Expr::DirCos(i) => {
                let r = Arc::new(Expr::Radius);
                let first = Expr::bin(
                    Div,
                    Expr::num(if *i == var { 1.0 } else { 0.0 }),
                    r.clone(),
                );
                let second = Expr::bin(
                    Div,
                    Expr::bin(Mul, Expr::var(*i), Expr::var(var)),
                    Expr::bin(Pow, r, Expr::num(3.0)),
                );
                Expr::bin(Sub, first, second)
            }
            Expr::Neg(a) => Arc::new(Expr::Neg(a.diff(var))),
            Expr::Bin(Add, a, b) => Expr::bin(Add, a.diff(var), b.diff(var)),
            Expr::Bin(Sub, a, b) => Expr::bin(Sub, a.diff(var), b.diff(var)),
            Expr::Bin(Mul, a, b) => Expr::bin(
                Add,
                Expr::bin(Mul, a.diff(var), b.clone()),
                Expr::bin(Mul, a.clone(), b.diff(var)),
            ),
            Expr::Bin(Div, a, b) => Expr::bin(
                Div,
                Expr::bin(
                    Sub,
                    Expr::bin(Mul, a.diff(var), b.clone()),
                    Expr::bin(Mul, a.clone(), b.diff(var)),
                ),
                Expr::bin(Pow, b.clone(), Expr::num(2.0)),
            ),
            Expr::Bin(Pow, a, b) => {
                if let Some(c) = const_value(b) {
                    // c·a^{c−1}·a′ keeps negative bases with integer
                    // exponents differentiable.
                    Expr::bin(
                        Mul,
                        Expr::bin(Mul, Expr::num(c), Expr::bin(Pow, a.clone(), Expr::num(c - 1.0))),
                        a.diff(var),
                    )
                } else {
                    // a^b · (b′ ln a + b a′ / a)
                    let factor = Expr::bin(
                        Add,
                        Expr::bin(Mul, b.diff(var), Expr::un(UnFn::Ln, a.clone())),
                        Expr::bin(Div, Expr::bin(Mul, b.clone(), a.diff(var)), a.clone()),
                    );
                    Expr::bin(Mul, Expr::bin(Pow, a.clone(), b.clone()), factor)
                }
            }
            Expr::Un(UnFn::Exp, a) => Expr::bin(Mul, Expr::un(UnFn::Exp, a.clone()), a.diff(var)),
            Expr::Un(UnFn::Ln, a) => Expr::bin(Div, a.diff(var), a.clone()),
            Expr::Un(UnFn::Sqrt, a) => Expr::bin(
                Div,
                a.diff(var),
                Expr::bin(Mul, Expr::num(2.0), Expr::un(UnFn::Sqrt, a.clone())),
            ),
            Expr::Un(UnFn::Abs, a) => Expr::bin(Mul, sign_of(a.clone()), a.diff(var)),
            Expr::Un(UnFn::Clampzero, a) => {
                Expr::bin(Mul, Arc::new(Expr::StepPos(a.clone())), a.diff(var))
            }
            Expr::Smoothstep(a, b, e) => {
                let s = Expr::bin(
                    Div,
                    Expr::bin(Sub, e.clone(), a.clone()),
                    Expr::bin(Sub, b.clone(), a.clone()),
                );
                let slope = Expr::bin(
                    Sub,
                    Expr::bin(Mul, Expr::num(6.0), s.clone()),
                    Expr::bin(Mul, Expr::num(6.0), Expr::bin(Pow, s.clone(), Expr::num(2.0))),
                );
                let gate = Expr::bin(
                    Mul,
                    Arc::new(Expr::StepPos(s.clone())),
                    Arc::new(Expr::StepPos(Expr::bin(Sub, Expr::num(1.0), s.clone()))),
                );
                Expr::bin(Mul, Expr::bin(Mul, gate, slope), s.diff(var))
            }
            // branch selection by sign; 0 at exact ties
            Expr::Min(a, b) => Expr::bin(
                Add,
                Expr::bin(
                    Mul,
                    Arc::new(Expr::StepPos(Expr::bin(Sub, b.clone(), a.clone()))),
                    a.diff(var),
                ),
                Expr::bin(
                    Mul,
                    Arc::new(Expr::StepPos(Expr::bin(Sub, a.clone(), b.clone()))),
                    b.diff(var),
                ),
            ),
            Expr::Max(a, b) => Expr::bin(
                Add,
                Expr::bin(
                    Mul,
                    Arc::new(Expr::StepPos(Expr::bin(Sub, a.clone(), b.clone()))),
                    a.diff(var),
                ),
                Expr::bin(
                    Mul,
                    Arc::new(Expr::StepPos(Expr::bin(Sub, b.clone(), a.clone()))),
                    b.diff(var),
                ),
            ),
        }
    }

    /// Replaces every `Var(i)` by `replacements[i]` (and leaves `Radius`
    /// untouched — substitution is only defined for radius-free targets or
    /// same-dimension identity-radius uses, which the callers guarantee).
    pub fn subst_vars(&self, replacements: &[Arc<Expr>]) -> Arc<Expr> {
        match self {
            Expr::Num(v) => Expr::num(*v),
            Expr::Var(i) => replacements[*i].clone(),
            Expr::Radius => Arc::new(Expr::Radius),
            Expr::DirCos(i) => Arc::new(Expr::DirCos(*i)),
            Expr::StepPos(a) => Arc::new(Expr::StepPos(a.subst_vars(replacements))),
            Expr::Neg(a) => Arc::new(Expr::Neg(a.subst_vars(replacements))),
            Expr::Bin(op, a, b) => {
                Expr::bin(*op, a.subst_vars(replacements), b.subst_vars(replacements))
            }
            Expr::Un(f, a) => Expr::un(*f, a.subst_vars(replacements)),
            Expr::Smoothstep(a, b, c) => Arc::new(Expr::Smoothstep(
                a.subst_vars(replacements),
                b.subst_vars(replacements),
                c.subst_vars(replacements),
            )),
            Expr::Min(a, b) => Arc::new(Expr::Min(
                a.subst_vars(replacements),
                b.subst_vars(replacements),
            )),
            Expr::Max(a, b) => Arc::new(Expr::Max(
                a.subst_vars(replacements),
                b.subst_vars(replacements),
            )),
        }
    }
}

fn sign_of(a: Arc<Expr>) -> Arc<Expr> {
    // sign with sign(0) = 0
    Expr::bin(
        BinOp::Sub,
        Arc::new(Expr::StepPos(a.clone())),
        Arc::new(Expr::StepPos(Arc::new(Expr::Neg(a)))),
    )
}

fn neg_folded(a: Arc<Expr>) -> Arc<Expr> {
    if let Expr::Num(v) = *a {
        Expr::num(-v)
    } else {
        Arc::new(Expr::Neg(a))
    }
}

/// Constant value of a variable-free subexpression, if any.
pub fn const_value(e: &Expr) -> Option<f64> {
    fn has_symbols(e: &Expr) -> bool {
        match e {
            Expr::Num(_) => false,
            Expr::Var(_) | Expr::Radius | Expr::DirCos(_) => true,
            Expr::Neg(a) | Expr::Un(_, a) | Expr::StepPos(a) => has_symbols(a),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                has_symbols(a) || has_symbols(b)
            }
            Expr::Smoothstep(a, b, c) => has_symbols(a) || has_symbols(b) || has_symbols(c),
        }
    }
    if has_symbols(e) {
        None
    } else {
        Some(e.eval(&[]))
    }
}

// ---------------------------------------------------------------------------
// printing

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Radius => write!(f, "r"),
            Expr::DirCos(i) => write!(f, "(x{}/r)", i + 1),
            Expr::StepPos(a) => write!(f, "steppos({a})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
            Expr::Un(func, a) => {
                let name = match func {
                    UnFn::Exp => "exp",
                    UnFn::Ln => "ln",
                    UnFn::Abs => "abs",
                    UnFn::Sqrt => "sqrt",
                    UnFn::Clampzero => "clampzero",
                };
                write!(f, "{name}({a})")
            }
            Expr::Smoothstep(a, b, e) => write!(f, "smoothstep({a},{b},{e})"),
            Expr::Min(a, b) => write!(f, "min({a},{b})"),
            Expr::Max(a, b) => write!(f, "max({a},{b})"),
        }
    }
}

// ---------------------------------------------------------------------------
// parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Parses a source string into an AST.
pub fn parse(source: &str) -> Result<Arc<Expr>, DslError> {
    if source.trim().is_empty() {
        return Err(DslError::Empty);
    }
    let mut p = Parser { src: source.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(DslError::Parse { pos: p.pos, msg: "trailing input".into() });
    }
    Ok(e)
}

/// Parses and checks that variable indices stay within `dim`.
pub fn parse_in_dim(source: &str, dim: usize) -> Result<Arc<Expr>, DslError> {
    let e = parse(source)?;
    let used = e.max_var();
    if used > dim {
        return Err(DslError::DimensionExceeded { used, dim });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Arc<Expr>, DslError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::bin(BinOp::Add, acc, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::bin(BinOp::Sub, acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, DslError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::bin(BinOp::Mul, acc, self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::bin(BinOp::Div, acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr>, DslError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            Ok(neg_folded(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Arc<Expr>, DslError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // exponent may carry a unary minus (x^-2), and ^ is
            // right-associative, binding tighter than unary minus on the left
            let exp = if self.peek() == Some(b'-') {
                self.pos += 1;
                neg_folded(self.power()?)
            } else {
                self.power()?
            };
            Ok(Expr::bin(BinOp::Pow, base, exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Arc<Expr>, DslError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            None => Err(DslError::Parse { pos: start, msg: "unexpected end of input".into() }),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(e)
                } else {
                    Err(DslError::Parse { pos: self.pos, msg: "expected `)`".into() })
                }
            }
            Some(c) if c.is_ascii_digit() || *c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => self.ident(),
            Some(c) => Err(DslError::Parse {
                pos: start,
                msg: format!("unexpected character `{}`", *c as char),
            }),
        }
    }

    fn number(&mut self) -> Result<Arc<Expr>, DslError> {
        let start = self.pos;
        let mut end = self.pos;
        let src = self.src;
        while end < src.len() && (src[end].is_ascii_digit() || src[end] == b'.') {
            end += 1;
        }
        if end < src.len() && (src[end] == b'e' || src[end] == b'E') {
            let mut m = end + 1;
            if m < src.len() && (src[m] == b'+' || src[m] == b'-') {
                m += 1;
            }
            if m < src.len() && src[m].is_ascii_digit() {
                end = m;
                while end < src.len() && src[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&src[start..end]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| DslError::Parse { pos: start, msg: format!("bad number `{text}`") })?;
        self.pos = end;
        Ok(Expr::num(v))
    }

    fn ident(&mut self) -> Result<Arc<Expr>, DslError> {
        let start = self.pos;
        let src = self.src;
        let mut end = self.pos;
        while end < src.len() && (src[end].is_ascii_alphanumeric() || src[end] == b'_') {
            end += 1;
        }
        let name = std::str::from_utf8(&src[start..end]).unwrap().to_string();
        self.pos = end;

        if name == "r" {
            return Ok(Arc::new(Expr::Radius));
        }
        if name == "s" {
            return Ok(Expr::var(0));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(i) = rest.parse::<usize>() {
                if i >= 1 {
                    return Ok(Expr::var(i - 1));
                }
            }
        }

        let arity: usize = match name.as_str() {
            "exp" | "ln" | "abs" | "sqrt" | "clampzero" => 1,
            "pow" | "min" | "max" => 2,
            "smoothstep" => 3,
            _ => return Err(DslError::UnknownIdent { pos: start, name }),
        };
        if self.peek() != Some(b'(') {
            return Err(DslError::Parse { pos: self.pos, msg: format!("expected `(` after `{name}`") });
        }
        self.pos += 1;
        let mut args = Vec::new();
        if self.peek() != Some(b')') {
            loop {
                args.push(self.expr()?);
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                    }
                    Some(b')') => break,
                    _ => {
                        return Err(DslError::Parse {
                            pos: self.pos,
                            msg: "expected `,` or `)`".into(),
                        })
                    }
                }
            }
        }
        self.pos += 1; // consume ')'
        if args.len() != arity {
            return Err(DslError::Arity { pos: start, name, expected: arity, got: args.len() });
        }
        let mut it = args.into_iter();
        Ok(match name.as_str() {
            "exp" => Expr::un(UnFn::Exp, it.next().unwrap()),
            "ln" => Expr::un(UnFn::Ln, it.next().unwrap()),
            "abs" => Expr::un(UnFn::Abs, it.next().unwrap()),
            "sqrt" => Expr::un(UnFn::Sqrt, it.next().unwrap()),
            "clampzero" => Expr::un(UnFn::Clampzero, it.next().unwrap()),
            "pow" => {
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Expr::bin(BinOp::Pow, a, b)
            }
            "min" => {
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Arc::new(Expr::Min(a, b))
            }
            "max" => {
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Arc::new(Expr::Max(a, b))
            }
            "smoothstep" => {
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Arc::new(Expr::Smoothstep(a, b, it.next().unwrap()))
            }
            _ => unreachable!(),
        })
    }
}

// ---------------------------------------------------------------------------
// fields and profiles

/// A scalar function on R^n with its exact symbolic gradient.
#[derive(Debug, Clone)]
pub struct Field {
    pub expr: Arc<Expr>,
    pub dim: usize,
    pub gradient: Vec<Arc<Expr>>,
    pub label: String,
    hessian: once_cell::sync::OnceCell<Vec<Vec<Arc<Expr>>>>,
}

impl Field {
    pub fn new(expr: Arc<Expr>, dim: usize, label: impl Into<String>) -> Result<Self, DslError> {
        let used = expr.max_var();
        if used > dim {
            return Err(DslError::DimensionExceeded { used, dim });
        }
        let gradient = (0..dim).map(|j| expr.diff(j)).collect();
        Ok(Field {
            expr,
            dim,
            gradient,
            label: label.into(),
            hessian: once_cell::sync::OnceCell::new(),
        })
    }

    pub fn from_source(source: &str, dim: usize, label: impl Into<String>) -> Result<Self, DslError> {
        Self::new(parse(source)?, dim, label)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.gradient.iter().map(|g| g.eval(x)).collect()
    }

    pub fn grad_j(&self, j: usize, x: &[f64]) -> f64 {
        self.gradient[j].eval(x)
    }

    /// Symbolic Hessian, built lazily.
    pub fn hessian(&self) -> &Vec<Vec<Arc<Expr>>> {
        self.hessian.get_or_init(|| {
            self.gradient
                .iter()
                .map(|g| (0..self.dim).map(|j| g.diff(j)).collect())
                .collect()
        })
    }

    /// ⟨α, ∇²f(x) α⟩ — the second directional derivative along α.
    pub fn second_directional(&self, alpha: &[f64], x: &[f64]) -> f64 {
        let h = self.hessian();
        let mut acc = 0.0;
        for (i, row) in h.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                acc += alpha[i] * alpha[j] * e.eval(x);
            }
        }
        acc
    }
}

/// A one-dimensional profile on s ≥ 0 with its exact derivative.
#[derive(Debug, Clone)]
pub struct Profile {
    pub expr: Arc<Expr>,
    pub derivative: Arc<Expr>,
    pub label: String,
}

impl Profile {
    pub fn new(expr: Arc<Expr>, label: impl Into<String>) -> Result<Self, DslError> {
        let used = expr.max_var();
        if used > 1 {
            return Err(DslError::DimensionExceeded { used, dim: 1 });
        }
        let derivative = expr.diff(0);
        Ok(Profile { expr, derivative, label: label.into() })
    }

    pub fn from_source(source: &str, label: impl Into<String>) -> Result<Self, DslError> {
        Self::new(parse(source)?, label)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.expr.eval(&[s])
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.derivative.eval(&[s])
    }

    /// Substitutes this profile's variable by `inner`, yielding the
    /// composition's expression.
    pub fn compose_expr(&self, inner: Arc<Expr>) -> Arc<Expr> {
        self.expr.subst_vars(&[inner])
    }

    /// Recognises c·s^e (powers, quotients and square roots of them);
    /// the power fast paths key off this.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        as_power(&self.expr)
    }
}

/// Tries to express an expression as c·s^e in the single variable s = x1.
pub fn as_power(e: &Expr) -> Option<(f64, f64)> {
    match e {
        Expr::Num(v) => Some((*v, 0.0)),
        Expr::Var(0) => Some((1.0, 1.0)),
        Expr::Neg(a) => as_power(a).map(|(c, p)| (-c, p)),
        Expr::Bin(BinOp::Mul, a, b) => {
            let (ca, pa) = as_power(a)?;
            let (cb, pb) = as_power(b)?;
            Some((ca * cb, pa + pb))
        }
        Expr::Bin(BinOp::Div, a, b) => {
            let (ca, pa) = as_power(a)?;
            let (cb, pb) = as_power(b)?;
            if cb == 0.0 {
                None
            } else {
                Some((ca / cb, pa - pb))
            }
        }
        Expr::Bin(BinOp::Pow, a, b) => {
            let (ca, pa) = as_power(a)?;
            let q = const_value(b)?;
            if ca < 0.0 && q.fract() != 0.0 {
                return None;
            }
            Some((ca.powf(q), pa * q))
        }
        Expr::Un(UnFn::Sqrt, a) => {
            let (ca, pa) = as_power(a)?;
            if ca < 0.0 {
                None
            } else {
                Some((ca.sqrt(), pa / 2.0))
            }
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// the built-in expression corpus

/// A corpus entry: label, source text, dimension, and whether the field is
/// invariant under every cataloged reflection group acting in that dimension
/// (radial functions and even-per-coordinate functions qualify for the
/// product groups; only radial ones qualify universally).
pub struct CorpusEntry {
    pub label: &'static str,
    pub source: &'static str,
    pub dim: usize,
    /// invariant under every reflection group of the catalog in this dim
    pub radial_invariant: bool,
}

/// The 50-expression corpus used by the collapse/chain-rule batteries.
pub fn corpus() -> Vec<CorpusEntry> {
    fn e(label: &'static str, source: &'static str, dim: usize, radial_invariant: bool) -> CorpusEntry {
        CorpusEntry { label, source, dim, radial_invariant }
    }
    vec![
        e("const", "3.5", 1, true),
        e("linear", "x1", 1, false),
        e("affine", "2*x1+1", 1, false),
        e("square", "x1^2", 1, true),
        e("cubic", "x1^3", 1, false),
        e("quartic", "x1^4", 1, true),
        e("poly_mixed", "x1^4-2*x1^2+0.5", 1, true),
        e("gauss", "exp(-x1^2)", 1, true),
        e("gauss_wide", "exp(-0.25*x1^2)", 1, true),
        e("gauss_quartic", "exp(-x1^4)", 1, true),
        e("exp_lin", "exp(0.3*x1)", 1, false),
        e("sqrt_shift", "sqrt(x1^2+1)", 1, true),
        e("ln_shift", "ln(x1^2+2)", 1, true),
        e("rational", "1/(1+x1^2)", 1, true),
        e("rational2", "x1^2/(1+x1^4)", 1, true),
        e("abs_cube", "abs(x1)^3", 1, true),
        e("smooth_ramp", "smoothstep(0,1,x1)", 1, false),
        e("ramp_sym", "smoothstep(0,1,x1^2)", 1, true),
        e("clamp_poly", "clampzero(1-x1^2)", 1, true),
        e("clamp_sq", "clampzero(1-x1^2)^2", 1, true),
        e("bump", "clampzero(1-x1^2)^3", 1, true),
        e("min_mix", "min(x1^2,1)", 1, true),
        e("max_mix", "max(x1^2-1,0)", 1, true),
        e("pow_call", "pow(x1^2+1,1.5)", 1, true),
        e("gauss_r", "exp(-r^2)", 1, true),
        e("radial_poly", "r^2", 2, true),
        e("radial_quartic", "r^4", 2, true),
        e("radial_gauss", "exp(-r^2)", 2, true),
        e("radial_gauss3", "exp(-r^2)", 3, true),
        e("radial_rational", "1/(1+r^2)", 2, true),
        e("radial_ln", "ln(1+r^2)", 2, true),
        e("radial_sqrt", "sqrt(1+r^2)", 2, true),
        e("radial_mix", "r^2*exp(-r^2)", 2, true),
        e("radial_bump", "clampzero(1-r^2)^3", 2, true),
        e("plane_wavey", "exp(-(x1+x2)^2)", 2, false),
        e("tensor_gauss", "exp(-x1^2-2*x2^2)", 2, false),
        e("even_pair", "x1^2*x2^2", 2, false),
        e("even_sum", "x1^2+x2^4", 2, false),
        e("odd_pair", "x1*x2", 2, false),
        e("shifted_gauss", "exp(-(x1-0.5)^2-x2^2)", 2, false),
        e("poly2d", "x1^2*x2^2+x1^4", 2, false),
        e("quotient2d", "x1^2/(1+x2^2)", 2, false),
        e("radial_plateau", "min(1,clampzero(2-r))", 2, true),
        e("gauss3d", "exp(-x1^2-x2^2-x3^2)", 3, true),
        e("poly3d", "x1^2+x2^2+x3^2", 3, true),
        e("mixed3d", "x1^2*x2^2*x3^2", 3, false),
        e("rational3d", "1/(1+r^2)", 3, true),
        e("radial_shell", "exp(-(r-1)^2)", 2, true),
        e("soft_abs", "sqrt(x1^2+1e-4)", 1, true),
        e("gauss_prod", "exp(-x1^2)*exp(-x2^2)", 2, true),
    ]
}
