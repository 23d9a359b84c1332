//! Closed-form scalar expressions in `t` and `x1..xn`.
//!
//! Grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | 'e' | 't' | 'x'digit+ | func '(' args ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'exp' (one argument) | 'pow' (two arguments)
//! ```
//!
//! Expressions are differentiated symbolically.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    /// Zero-based spatial axis.
    X(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Ln(Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    node: Node,
    source: String,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    /// Parse `src`, accepting spatial variables `x1..x{axes}`.
    pub fn parse(src: &str, axes: usize) -> Result<Expr> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
            axes,
        };
        let node = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr {
            node,
            source: src.trim().to_string(),
        })
    }

    pub fn constant(c: f64) -> Expr {
        Expr {
            node: Node::Const(c),
            source: format!("{c}"),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        eval(&self.node, t, x)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        uses(&self.node, &|w| w == v)
    }

    pub fn depends_on_space(&self) -> bool {
        uses(&self.node, &|w| matches!(w, Var::X(_)))
    }

    /// Exact derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        let node = diff(&self.node, v);
        let name = match v {
            Var::T => "t".to_string(),
            Var::X(j) => format!("x{}", j + 1),
        };
        Expr {
            node,
            source: format!("d/d{name}[{}]", self.source),
        }
    }
}

fn eval(n: &Node, t: f64, x: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(Var::T) => t,
        Node::Var(Var::X(j)) => x.get(*j).copied().unwrap_or(0.0),
        Node::Neg(a) => -eval(a, t, x),
        Node::Add(a, b) => eval(a, t, x) + eval(b, t, x),
        Node::Sub(a, b) => eval(a, t, x) - eval(b, t, x),
        Node::Mul(a, b) => eval(a, t, x) * eval(b, t, x),
        Node::Div(a, b) => eval(a, t, x) / eval(b, t, x),
        Node::Pow(a, b) => eval(a, t, x).powf(eval(b, t, x)),
        Node::Sin(a) => eval(a, t, x).sin(),
        Node::Cos(a) => eval(a, t, x).cos(),
        Node::Exp(a) => eval(a, t, x).exp(),
        Node::Ln(a) => eval(a, t, x).ln(),
    }
}

fn uses(n: &Node, pred: &dyn Fn(Var) -> bool) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Var(v) => pred(*v),
        Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Ln(a) => uses(a, pred),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, pred) || uses(b, pred)
        }
    }
}

fn is_zero(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 0.0)
}

fn is_one(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 1.0)
}

fn add(a: Node, b: Node) -> Node {
    match (is_zero(&a), is_zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (is_zero(&a), is_zero(&b)) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    if is_zero(&a) || is_zero(&b) {
        Node::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Node::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Node, b: Node) -> Node {
    if is_zero(&a) {
        Node::Const(0.0)
    } else if is_one(&b) {
        a
    } else {
        Node::Div(Box::new(a), Box::new(b))
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        other => Node::Neg(Box::new(other)),
    }
}

fn constant_in(n: &Node, v: Var) -> bool {
    !uses(n, &|w| w == v)
}

fn diff(n: &Node, v: Var) -> Node {
    match n {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(w) => Node::Const(if *w == v { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(diff(a, v)),
        Node::Add(a, b) => add(diff(a, v), diff(b, v)),
        Node::Sub(a, b) => sub(diff(a, v), diff(b, v)),
        Node::Mul(a, b) => add(
            mul(diff(a, v), (**b).clone()),
            mul((**a).clone(), diff(b, v)),
        ),
        Node::Div(a, b) => {
            let num = sub(
                mul(diff(a, v), (**b).clone()),
                mul((**a).clone(), diff(b, v)),
            );
            div(num, mul((**b).clone(), (**b).clone()))
        }
        Node::Pow(a, b) => {
            if constant_in(b, v) {
                // d(a^c) = c a^(c-1) a'
                let exponent = sub((**b).clone(), Node::Const(1.0));
                mul(
                    mul((**b).clone(), Node::Pow(a.clone(), Box::new(exponent))),
                    diff(a, v),
                )
            } else {
                // d(a^b) = a^b (b' ln a + b a' / a)
                let inner = add(
                    mul(diff(b, v), Node::Ln(a.clone())),
                    div(mul((**b).clone(), diff(a, v)), (**a).clone()),
                );
                mul(n.clone(), inner)
            }
        }
        Node::Sin(a) => mul(Node::Cos(a.clone()), diff(a, v)),
        Node::Cos(a) => mul(neg(Node::Sin(a.clone())), diff(a, v)),
        Node::Exp(a) => mul(n.clone(), diff(a, v)),
        Node::Ln(a) => div(diff(a, v), (**a).clone()),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    axes: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        let src: String = self.chars.iter().collect();
        Error::input("", format!("{msg} at column {} in {src:?}", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.error(&format!("unexpected character {c:?}"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < self.chars.len() && matches!(self.chars[self.pos], 'e' | 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.chars.len() && matches!(self.chars[self.pos], '+' | '-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| self.error(&format!("malformed number {text:?}")))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "t" => Ok(Node::Var(Var::T)),
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            "sin" | "cos" | "exp" => {
                let mut args = self.args()?;
                if args.len() != 1 {
                    return Err(self.error(&format!("{name} takes one argument")));
                }
                let a = Box::new(args.remove(0));
                Ok(match name.as_str() {
                    "sin" => Node::Sin(a),
                    "cos" => Node::Cos(a),
                    _ => Node::Exp(a),
                })
            }
            "pow" => {
                let mut args = self.args()?;
                if args.len() != 2 {
                    return Err(self.error("pow takes two arguments"));
                }
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Node::Pow(Box::new(a), Box::new(b)))
            }
            _ => {
                if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if idx >= 1 && idx <= self.axes {
                        return Ok(Node::Var(Var::X(idx - 1)));
                    }
                    self.pos = start;
                    return Err(self.error(&format!(
                        "variable {name} out of range (spatial axes x1..x{})",
                        self.axes
                    )));
                }
                self.pos = start;
                Err(self.error(&format!("unknown identifier {name:?}")))
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Node>> {
        if !self.eat('(') {
            return Err(self.error("expected '('"));
        }
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        if !self.eat(')') {
            return Err(self.error("expected ')'"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("1 + 0.3*sin(t)", 1).unwrap();
        assert!((e.eval(1.0, &[0.0]) - (1.0 + 0.3 * 1f64.sin())).abs() < 1e-15);
        let e = Expr::parse("2 + 0.5*cos(x1)*pow(exp(t), 2) / 4 - -1", 1).unwrap();
        let v = 2.0 + 0.5 * 0.3f64.cos() * (0.7f64.exp()).powi(2) / 4.0 + 1.0;
        assert!((e.eval(0.7, &[0.3]) - v).abs() < 1e-14);
        assert_eq!(Expr::parse("2^3^2", 0).unwrap().eval(0.0, &[]), 512.0);
        assert_eq!(Expr::parse("-2^2", 0).unwrap().eval(0.0, &[]), -4.0);
        assert_eq!(Expr::parse("1.5e-1*2", 0).unwrap().eval(0.0, &[]), 0.3);
    }

    #[test]
    fn rejects_bad_input() {
        for s in ["1 +", "sin t", "x2", "foo(t)", "pow(t)", "(t", "t $ 2", ""] {
            assert!(Expr::parse(s, 1).is_err(), "{s}");
        }
    }

    #[test]
    fn dependencies() {
        let e = Expr::parse("exp(2*t)*cos(x2)", 3).unwrap();
        assert!(e.depends_on(Var::T) && e.depends_on(Var::X(1)) && !e.depends_on(Var::X(0)));
        assert!(e.depends_on_space());
        assert!(!Expr::parse("exp(t)", 1).unwrap().depends_on_space());
    }

    #[test]
    fn variable_exponent_derivative() {
        let e = Expr::parse("pow(2 + x1, t)", 1).unwrap();
        let (t, x) = (0.8, 0.4);
        let exact = (2.0f64 + x).powf(t) * (2.0f64 + x).ln();
        assert!((e.diff(Var::T).eval(t, &[x]) - exact).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn derivative_matches_centered_difference(t in -2.0f64..2.0, x in -3.0f64..3.0) {
            let e = Expr::parse("(1 + 0.3*sin(t)*cos(x1)) * exp(0.2*t) / (2 + cos(x1)) + pow(1.5 + sin(x1), 3)", 1).unwrap();
            let h = 1e-5;
            for v in [Var::T, Var::X(0)] {
                let (tp, tm, xp, xm) = match v {
                    Var::T => (t + h, t - h, x, x),
                    Var::X(_) => (t, t, x + h, x - h),
                };
                let fd = (e.eval(tp, &[xp]) - e.eval(tm, &[xm])) / (2.0 * h);
                prop_assert!((e.diff(v).eval(t, &[x]) - fd).abs() < 1e-7);
            }
        }
    }
}
