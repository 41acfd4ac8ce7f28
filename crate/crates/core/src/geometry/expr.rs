//! Closed expression grammar for scalar fields over chart coordinates.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'pi' | x<k> | func '(' expr (',' expr)? ')' | '(' expr ')' | '|' expr '|'
//! func    := pow | exp | log | sqrt | abs
//! ```
//!
//! Coordinates are `x1 .. xn` (1-based). `|x|` is the Euclidean norm of the
//! whole chart point; `|e|` for any other expression is its absolute value.
//! `a ^ b` is right associative and binds tighter than unary minus, so
//! `-x1^2` is `-(x1^2)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Norm,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn constant(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest coordinate index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Norm => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Sqrt(a) | Expr::Abs(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            Expr::Const(c) => lit(*c),
            Expr::Var(i) => x[*i],
            Expr::Norm => x.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt(),
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => match b.constant() {
                Some(c) if c.fract() == 0.0 && c.abs() <= 64.0 => a.eval(x).powi(c as i32),
                _ => a.eval(x).powf(b.eval(x)),
            },
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Abs(a) => a.eval(x).abs(),
        }
    }

    /// Symbolic partial derivative with respect to coordinate `k`.
    pub fn diff(&self, k: usize) -> Expr {
        use Expr::*;
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == k { 1.0 } else { 0.0 }),
            // d|x|/dx_k = x_k / |x|
            Norm => div(Var(k), Norm),
            Neg(a) => neg(a.diff(k)),
            Add(a, b) => add(a.diff(k), b.diff(k)),
            Sub(a, b) => sub(a.diff(k), b.diff(k)),
            Mul(a, b) => add(mul(a.diff(k), (**b).clone()), mul((**a).clone(), b.diff(k))),
            Div(a, b) => div(
                sub(mul(a.diff(k), (**b).clone()), mul((**a).clone(), b.diff(k))),
                pow((**b).clone(), Const(2.0)),
            ),
            Pow(a, b) => match b.constant() {
                Some(c) => mul(mul(Const(c), pow((**a).clone(), Const(c - 1.0))), a.diff(k)),
                None => {
                    // a^b * (b' ln a + b a' / a)
                    let inner = add(
                        mul(b.diff(k), Log(a.clone())),
                        div(mul((**b).clone(), a.diff(k)), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            },
            Exp(a) => mul(self.clone(), a.diff(k)),
            Log(a) => div(a.diff(k), (**a).clone()),
            Sqrt(a) => div(a.diff(k), mul(Const(2.0), self.clone())),
            Abs(a) => mul(div((**a).clone(), self.clone()), a.diff(k)),
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.constant(), b.constant()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.constant(), b.constant()) {
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b.constant() {
        Some(y) if y == 1.0 => a,
        Some(y) if y == 0.0 => Expr::Const(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Norm => write!(f, "|x|"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Abs(a) => write!(f, "|{a}|"),
        }
    }
}

/// A parsed scalar field together with its symbolic gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    source: String,
    expr: Expr,
    grad: Vec<Expr>,
    dim: usize,
}

impl ScalarField {
    /// Parses `source` as a field over `dim` chart coordinates.
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        let expr = Parser::new(source).parse()?;
        if expr.arity() > dim {
            return Err(Error::Parse {
                pos: 0,
                message: format!("coordinate x{} exceeds chart dimension {dim}", expr.arity()),
            });
        }
        Ok(Self::from_expr(source.to_string(), expr, dim))
    }

    pub fn from_expr(source: String, expr: Expr, dim: usize) -> Self {
        let grad = (0..dim).map(|k| expr.diff(k)).collect();
        Self { source, expr, grad, dim }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::from_expr(format!("{value}"), Expr::Const(value), dim)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        self.expr.eval(x)
    }

    pub fn grad<T: Real>(&self, x: &[T]) -> Vec<T> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    /// `true` when the field does not depend on the coordinates.
    pub fn is_constant(&self) -> bool {
        self.expr.constant().is_some()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
    }

    fn err<R>(&self, message: impl Into<String>) -> Result<R> {
        Err(Error::Parse { pos: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn parse(mut self) -> Result<Expr> {
        let e = self.sum()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'|') => {
                self.pos += 1;
                let start = self.pos;
                self.skip_ws();
                let inner = if self.src.get(self.pos) == Some(&b'x')
                    && !self.src.get(self.pos + 1).is_some_and(|c| c.is_ascii_alphanumeric())
                {
                    self.pos += 1;
                    Expr::Norm
                } else {
                    self.pos = start;
                    Expr::Abs(Box::new(self.sum()?))
                };
                self.expect(b'|')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("malformed number '{text}'"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        if let Some(idx) = name.strip_prefix('x') {
            if let Ok(k) = idx.parse::<usize>() {
                if k == 0 {
                    self.pos = start;
                    return self.err("coordinates are numbered from x1");
                }
                return Ok(Expr::Var(k - 1));
            }
            if idx.is_empty() {
                self.pos = start;
                return self.err("bare 'x' is only valid as the norm |x|");
            }
        }
        let unary: fn(Box<Expr>) -> Expr = match name {
            "exp" => Expr::Exp,
            "log" => Expr::Log,
            "sqrt" => Expr::Sqrt,
            "abs" => Expr::Abs,
            "pow" => {
                self.expect(b'(')?;
                let a = self.sum()?;
                self.expect(b',')?;
                let b = self.sum()?;
                self.expect(b')')?;
                return Ok(Expr::Pow(Box::new(a), Box::new(b)));
            }
            _ => {
                self.pos = start;
                return self.err(format!("unknown identifier '{name}'"));
            }
        };
        self.expect(b'(')?;
        let a = self.sum()?;
        self.expect(b')')?;
        Ok(unary(Box::new(a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: &[f64]) -> f64 {
        ScalarField::parse(src, x.len()).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[0.0, 0.0]), 7.0);
        assert_eq!(eval("-x1^2", &[3.0, 0.0]), -9.0);
        assert_eq!(eval("2^3^2", &[0.0, 0.0]), 512.0);
        assert_eq!(eval("(1 + 2) * 3 - 4 / 2", &[0.0, 0.0]), 7.0);
        assert_eq!(eval("8 / 2 / 2", &[0.0, 0.0]), 2.0);
    }

    #[test]
    fn functions_and_norm() {
        assert!((eval("|x|", &[3.0, 4.0]) - 5.0).abs() < 1e-15);
        assert!((eval("sqrt(x1) + exp(0) + log(1)", &[4.0, 0.0]) - 3.0).abs() < 1e-15);
        assert!((eval("pow(x2, 3)", &[0.0, 2.0]) - 8.0).abs() < 1e-15);
        assert!((eval("|x1 - 5|", &[2.0, 0.0]) - 3.0).abs() < 1e-15);
        assert!((eval("1.5e2 + 2E-1", &[0.0, 0.0]) - 150.2).abs() < 1e-12);
        assert!((eval("pi", &[0.0, 0.0]) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ScalarField::parse("1 + * 2", 2).unwrap_err();
        assert!(matches!(err, Error::Parse { pos: 4, .. }), "{err:?}");
        assert!(ScalarField::parse("x3", 2).is_err());
        assert!(ScalarField::parse("foo(1)", 2).is_err());
        assert!(ScalarField::parse("x + 1", 2).is_err());
        assert!(ScalarField::parse("(1 + 2", 2).is_err());
        assert!(ScalarField::parse("1 2", 2).is_err());
    }

    #[test]
    fn symbolic_gradient_matches_central_differences() {
        let sources = [
            "1 / (1 + |x|^2)",
            "exp(-x1^2 - 2*x2^2) + x1*x2",
            "sqrt(1 + x1^2) * log(2 + x2^2)",
            "pow(1 + |x|, x1)",
            "1 / (1 - (-|x|^4))",
            "|x1 - x2|",
        ];
        let x = [0.3f64, -0.7];
        let h = 1e-6;
        for src in sources {
            let f = ScalarField::parse(src, 2).unwrap();
            let g = f.grad(&x);
            for k in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                assert!((g[k] - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{src} d/dx{k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let f = ScalarField::parse("x1 * x2 + 1", 2).unwrap();
        assert_eq!(f.eval(&[2.0f32, 3.0]), 7.0f32);
        assert_eq!(f.grad(&[2.0f32, 3.0]), vec![3.0f32, 2.0]);
    }
}
