//! The closed expression grammar for function-valued hypotheses.
//!
//! Configs describe functions (strength profiles, moduli, step
//! schedules, rate overrides) as strings over a deliberately small
//! grammar: numbers, the argument `t` (plus `k` where a two-argument
//! modulus is expected), `+ - * /`, `^` (right-associative power),
//! unary minus, parentheses, and the calls `exp`, `log`, `min`, `max`,
//! `ceil`. A tiny recursive-descent parser compiles a string into an
//! AST that evaluates without any ambient state, which keeps runs
//! reproducible and sandboxed.

use std::fmt;
use std::sync::Arc;

use accretia_core::RealFn;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("byte {at}: unexpected character {found:?}")]
    UnexpectedChar { at: usize, found: char },
    #[error("byte {at}: expected {expected}, found {found}")]
    Unexpected {
        at: usize,
        expected: &'static str,
        found: String,
    },
    #[error("byte {at}: unknown identifier `{name}`")]
    UnknownIdent { at: usize, name: String },
    #[error("byte {at}: `{name}` takes {expected} argument(s), got {got}")]
    Arity {
        at: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("byte {at}: the variable `k` is not available in this context")]
    KNotAllowed { at: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Min,
    Max,
    Ceil,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Exp | Func::Log | Func::Ceil => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOpNode),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinOpNode {
    op: BinOp,
    lhs: Box<Expr>,
    rhs: Box<Expr>,
}

impl Expr {
    /// Evaluates with `t` bound; `k` must not occur (enforced at parse).
    pub fn eval(&self, t: f64) -> f64 {
        self.eval2(t, f64::NAN)
    }

    /// Evaluates with both `t` and `k` bound.
    pub fn eval2(&self, t: f64, k: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::K) => k,
            Expr::Neg(e) => -e.eval2(t, k),
            Expr::Bin(node) => {
                let a = node.lhs.eval2(t, k);
                let b = node.rhs.eval2(t, k);
                match node.op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => match f {
                Func::Exp => args[0].eval2(t, k).exp(),
                Func::Log => args[0].eval2(t, k).ln(),
                Func::Ceil => args[0].eval2(t, k).ceil(),
                Func::Min => args[0].eval2(t, k).min(args[1].eval2(t, k)),
                Func::Max => args[0].eval2(t, k).max(args[1].eval2(t, k)),
            },
        }
    }

    /// Wraps a one-variable expression as a shared function object.
    pub fn into_real_fn(self) -> RealFn {
        Arc::new(move |t| self.eval(t))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::K) => write!(f, "k"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(node) => {
                let op = match node.op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({} {} {})", node.lhs, op, node.rhs)
            }
            Expr::Call(func, args) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Min => "min",
                    Func::Max => "max",
                    Func::Ceil => "ceil",
                };
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses a one-variable expression (only `t` allowed).
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    Parser::new(src, false).parse_full()
}

/// Parses a two-variable expression (`t` and `k` allowed).
pub fn parse_with_k(src: &str) -> Result<Expr, ExprError> {
    Parser::new(src, true).parse_full()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    allow_k: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allow_k: bool) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
            allow_k,
        }
    }

    fn parse_full(mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Err(ExprError::Empty);
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(ExprError::Unexpected {
                at: self.pos,
                expected: "end of expression",
                found: (self.src[self.pos] as char).to_string(),
            });
        }
        Ok(e)
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

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = bin(BinOp::Add, lhs, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = bin(BinOp::Sub, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = bin(BinOp::Mul, lhs, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = bin(BinOp::Div, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // Right-associative; `-` binds looser, so -t^2 = -(t^2).
            let exponent = if self.peek() == Some(b'-') {
                self.pos += 1;
                Expr::Neg(Box::new(self.power()?))
            } else {
                self.power()?
            };
            return Ok(bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(ExprError::UnexpectedEnd),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(ExprError::UnexpectedChar {
                at: self.pos,
                found: c as char,
            }),
        }
    }

    fn expect(&mut self, want: u8) -> Result<(), ExprError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(ExprError::Unexpected {
                at: self.pos,
                expected: "closing parenthesis",
                found: (c as char).to_string(),
            }),
            None => Err(ExprError::UnexpectedEnd),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|n| n.is_ascii_digit() || *n == b'+' || *n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ExprError::Unexpected {
            at: start,
            expected: "a number",
            found: text.to_string(),
        })
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match name {
            "t" => return Ok(Expr::Var(Var::T)),
            "k" => {
                if self.allow_k {
                    return Ok(Expr::Var(Var::K));
                }
                return Err(ExprError::KNotAllowed { at: start });
            }
            _ => {}
        }
        let func = match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "min" => Func::Min,
            "max" => Func::Max,
            "ceil" => Func::Ceil,
            _ => {
                return Err(ExprError::UnknownIdent {
                    at: start,
                    name: name.to_string(),
                })
            }
        };
        self.expect(b'(').map_err(|_| ExprError::Unexpected {
            at: self.pos,
            expected: "argument list",
            found: "missing `(`".to_string(),
        })?;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                at: start,
                name: name.to_string(),
                expected: func.arity(),
                got: args.len(),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::Bin(BinOpNode {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, t: f64) -> f64 {
        parse(src).unwrap().eval(t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1+2*3", 0.0), 7.0);
        assert_eq!(eval("(1+2)*3", 0.0), 9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0); // right-assoc
        assert_eq!(eval("-t^2", 3.0), -9.0);
        assert_eq!(eval("2*t^2", 3.0), 18.0);
        assert_eq!(eval("10-2-3", 0.0), 5.0);
        assert_eq!(eval("16/4/2", 0.0), 2.0);
    }

    #[test]
    fn functions_evaluate() {
        assert_eq!(eval("exp(0)", 0.0), 1.0);
        assert!((eval("log(exp(1))", 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval("min(3, t)", 1.0), 1.0);
        assert_eq!(eval("max(3, t)", 1.0), 3.0);
        assert_eq!(eval("ceil(2.1)", 0.0), 3.0);
        assert_eq!(eval("ceil(1/t^0.5)", 0.04), 5.0);
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(eval("1e-3", 0.0), 1e-3);
        assert_eq!(eval("2.5E+2", 0.0), 250.0);
        assert_eq!(eval("t*1e2", 0.5), 50.0);
    }

    #[test]
    fn two_variable_expressions() {
        let e = parse_with_k("k^2/t").unwrap();
        assert_eq!(e.eval2(2.0, 4.0), 8.0);
        assert!(matches!(parse("k+1"), Err(ExprError::KNotAllowed { .. })));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("2 + $") {
            Err(ExprError::UnexpectedChar { at, found }) => {
                assert_eq!(at, 4);
                assert_eq!(found, '$');
            }
            other => panic!("unexpected: {other:?}"),
        }
        assert!(matches!(parse("foo(1)"), Err(ExprError::UnknownIdent { .. })));
        assert!(matches!(parse("min(1)"), Err(ExprError::Arity { .. })));
        assert!(matches!(parse(""), Err(ExprError::Empty)));
        assert!(matches!(parse("1+"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(parse("(1"), Err(ExprError::UnexpectedEnd)));
    }

    #[test]
    fn whitespace_is_free() {
        assert_eq!(eval("  1 +  2*t ", 3.0), 7.0);
    }

    #[test]
    fn display_round_trips_through_parser() {
        for src in ["t^2", "min(1/4, t/1.5)", "ceil(4*exp(t))", "-(t+1)/2"] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            for t in [0.1, 0.5, 2.0] {
                assert_eq!(e.eval(t), reparsed.eval(t), "src = {src}");
            }
        }
    }
}
