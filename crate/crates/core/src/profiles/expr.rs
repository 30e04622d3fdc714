//! Closed-form profile descriptors.
//!
//! Grammar (variable `x`, constants `e` and `pi`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'e' | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := exp | sqrt | abs | log | min | max
//! ```
//!
//! Superscript ² and ³ and the Unicode minus sign are accepted. Evaluation runs
//! in a signed-logarithm representation so that values such as exp(-2^17) stay
//! positive instead of underflowing.

use std::fmt;

use crate::error::{Error, Result};

/// A real number stored as sign and natural log of the magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal {
    pub sign: i8,
    pub ln: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: 0,
        ln: f64::NEG_INFINITY,
    };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogReal {
                sign: if v > 0.0 { 1 } else { -1 },
                ln: v.abs().ln(),
            }
        }
    }

    pub fn positive_from_ln(ln: f64) -> Self {
        LogReal { sign: 1, ln }
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.ln.exp()
    }

    fn neg(self) -> Self {
        LogReal {
            sign: -self.sign,
            ln: self.ln,
        }
    }

    fn add(self, o: Self) -> Self {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        let d = small.ln - big.ln;
        if big.sign == small.sign {
            LogReal {
                sign: big.sign,
                ln: big.ln + d.exp().ln_1p(),
            }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            LogReal {
                sign: big.sign,
                ln: big.ln + (-d.exp()).ln_1p(),
            }
        }
    }

    fn mul(self, o: Self) -> Self {
        if self.sign == 0 || o.sign == 0 {
            return Self::ZERO;
        }
        LogReal {
            sign: self.sign * o.sign,
            ln: self.ln + o.ln,
        }
    }

    fn div(self, o: Self) -> Result<Self> {
        if o.sign == 0 {
            return Err(Error::Domain("division by zero".into()));
        }
        if self.sign == 0 {
            return Ok(Self::ZERO);
        }
        Ok(LogReal {
            sign: self.sign * o.sign,
            ln: self.ln - o.ln,
        })
    }

    fn less(self, o: Self) -> bool {
        match (self.sign, o.sign) {
            (a, b) if a != b => a < b,
            (0, 0) => false,
            (1, 1) => self.ln < o.ln,
            _ => self.ln > o.ln,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Sqrt,
    Abs,
    Log,
    Min,
    Max,
}

/// A parsed closed-form expression in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn normalize(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for c in src.chars() {
        match c {
            '\u{2212}' | '\u{2013}' => out.push('-'),
            '\u{00b2}' => out.push_str("^2"),
            '\u{00b3}' => out.push_str("^3"),
            '\u{00b7}' | '\u{00d7}' => out.push('*'),
            '\u{221a}' => out.push_str("sqrt"),
            _ => out.push(c),
        }
    }
    out
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && (b[j] as char).is_ascii_digit() {
                    i = j;
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = s[start..i].parse().map_err(|_| Error::Parse {
                pos: start,
                msg: format!("bad number '{}'", &s[start..i]),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_ascii_lowercase())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "x" => return Ok(Node::X),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "log" | "ln" => Func::Log,
                    "min" => Func::Min,
                    "max" => Func::Max,
                    other => {
                        self.pos -= 1;
                        return self.err(format!("unknown identifier '{other}'"));
                    }
                };
                if !self.eat('(') {
                    return self.err("expected '(' after function name");
                }
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                let arity_ok = match func {
                    Func::Min | Func::Max => args.len() >= 2,
                    _ => args.len() == 1,
                };
                if !arity_ok {
                    return self.err(format!("wrong number of arguments for {name}"));
                }
                Ok(Node::Call(func, args))
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let norm = normalize(src);
        let toks = tokenize(&norm)?;
        let mut p = Parser {
            toks,
            pos: 0,
            end: norm.len(),
        };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(Expr {
            root,
            source: src.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval_log(&self, x: f64) -> Result<LogReal> {
        eval(&self.root, x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_log(x)?.to_f64())
    }
}

fn eval(n: &Node, x: f64) -> Result<LogReal> {
    Ok(match n {
        Node::Num(v) => LogReal::from_f64(*v),
        Node::X => LogReal::from_f64(x),
        Node::Neg(a) => eval(a, x)?.neg(),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match op {
                Op::Add => a.add(b),
                Op::Sub => a.add(b.neg()),
                Op::Mul => a.mul(b),
                Op::Div => a.div(b)?,
                Op::Pow => pow(a, b)?,
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x)?;
            match f {
                Func::Exp => LogReal::positive_from_ln(a.to_f64()),
                Func::Sqrt => {
                    if a.sign < 0 {
                        return Err(Error::Domain(format!("sqrt of a negative value at x = {x}")));
                    }
                    LogReal { sign: a.sign, ln: 0.5 * a.ln }
                }
                Func::Abs => LogReal { sign: a.sign.abs(), ln: a.ln },
                Func::Log => {
                    if a.sign <= 0 {
                        return Err(Error::Domain(format!("log of a non-positive value at x = {x}")));
                    }
                    LogReal::from_f64(a.ln)
                }
                Func::Min | Func::Max => {
                    let mut best = a;
                    for arg in &args[1..] {
                        let v = eval(arg, x)?;
                        let take = if *f == Func::Min { v.less(best) } else { best.less(v) };
                        if take {
                            best = v;
                        }
                    }
                    best
                }
            }
        }
    })
}

fn pow(a: LogReal, b: LogReal) -> Result<LogReal> {
    let p = b.to_f64();
    if a.sign == 0 {
        return if p > 0.0 {
            Ok(LogReal::ZERO)
        } else {
            Err(Error::Domain("zero raised to a non-positive power".into()))
        };
    }
    if a.sign > 0 {
        return Ok(LogReal::positive_from_ln(a.ln * p));
    }
    if p.fract() != 0.0 {
        return Err(Error::Domain("negative base with a fractional exponent".into()));
    }
    let sign = if (p as i64).rem_euclid(2) == 0 { 1 } else { -1 };
    Ok(LogReal { sign, ln: a.ln * p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert!((ev("1+2*3", 0.0) - 7.0).abs() < 1e-14);
        assert!((ev("2^3^2", 0.0) - 512.0).abs() < 1e-9);
        assert!((ev("-x^2", 3.0) + 9.0).abs() < 1e-12);
        assert!((ev("(1+x)/(2-x)", 0.5) - 1.0).abs() < 1e-15);
        assert!((ev("1e-3*x", 2.0) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn functions_and_unicode() {
        assert!((ev("exp(−sqrt(abs(x)))", -4.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((ev("x²+1", 3.0) - 10.0).abs() < 1e-12);
        assert!((ev("min(1, 1/log(e+abs(x)))", 0.0) - 1.0).abs() < 1e-15);
        assert!((ev("max(x, 2, -1)", 0.5) - 2.0).abs() < 1e-15);
        assert!((ev("pi", 0.0) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn tiny_values_keep_their_logarithm() {
        let e = Expr::parse("exp(-abs(x))").unwrap();
        let v = e.eval_log(1e6).unwrap();
        assert_eq!(v.sign, 1);
        assert!((v.ln + 1e6).abs() < 1e-6);
        let e = Expr::parse("exp(-x^2)*2").unwrap();
        let v = e.eval_log(1e3).unwrap();
        assert!((v.ln - (2f64.ln() - 1e6)).abs() < 1e-6);
    }

    #[test]
    fn parse_errors_carry_position() {
        match Expr::parse("exp(x") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("x $ 2").is_err());
        assert!(Expr::parse("min(x)").is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(Expr::parse("log(x)").unwrap().eval(-1.0).is_err());
        assert!(Expr::parse("1/x").unwrap().eval(0.0).is_err());
        assert!(Expr::parse("sqrt(x)").unwrap().eval(-1.0).is_err());
    }
}
