//! Arithmetic expressions over domain, codomain and probe variables.
//!
//! The grammar is fixed and has no implicit multiplication:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | constant | variable | function '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`, and it is
//! right-associative. Variables are `x1..xd` (alias `x` when `d = 1`) for the
//! domain, `y1..yl` (alias `y` when `l = 1`) for the codomain, and `s` for the
//! probe variable of test functions. Constants are `pi` and `e`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Which variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub probe: bool,
}

impl Scope {
    /// Domain variables `x1..xd`.
    pub const fn domain(d: usize) -> Self {
        Scope { domain_dim: d, codomain_dim: 0, probe: false }
    }

    /// Codomain variables `y1..yl`, used by inverses and inverse Jacobians.
    pub const fn codomain(l: usize) -> Self {
        Scope { domain_dim: 0, codomain_dim: l, probe: false }
    }

    /// The single probe variable `s`.
    pub const fn probe() -> Self {
        Scope { domain_dim: 0, codomain_dim: 0, probe: true }
    }

    /// Domain variables plus `s`, for Carathéodory integrands `psi(x, s)`.
    pub const fn caratheodory(d: usize) -> Self {
        Scope { domain_dim: d, codomain_dim: 0, probe: true }
    }

    /// True when every variable allowed in `self` is also allowed in `other`.
    pub fn within(&self, other: &Scope) -> bool {
        self.domain_dim <= other.domain_dim
            && self.codomain_dim <= other.codomain_dim
            && (!self.probe || other.probe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Zero-based domain coordinate.
    Domain(usize),
    /// Zero-based codomain coordinate.
    Codomain(usize),
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => core::f64::consts::PI,
            Constant::E => core::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
}

impl Func {
    pub const ALL: [Func; 7] =
        [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs, Func::Floor];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

// Printing precedence levels.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_SUM,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_PRODUCT,
            Node::Neg(_) => PREC_UNARY,
            Node::Binary(BinOp::Pow, ..) => PREC_POWER,
            _ => PREC_ATOM,
        }
    }

    fn has_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Const(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    fn fits(&self, scope: &Scope) -> bool {
        match self {
            Node::Var(Var::Domain(i)) => *i < scope.domain_dim,
            Node::Var(Var::Codomain(i)) => *i < scope.codomain_dim,
            Node::Var(Var::Probe) => scope.probe,
            Node::Num(_) | Node::Const(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.fits(scope),
            Node::Binary(_, a, b) => a.fits(scope) && b.fits(scope),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Num(_) | Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        let v = match self {
            Node::Num(v) => *v,
            Node::Const(c) => c.value(),
            Node::Var(var) => env.lookup(*var)?,
            Node::Neg(a) => -a.eval(env)?,
            Node::Binary(op, a, b) => {
                let l = a.eval(env)?;
                let r = b.eval(env)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        l / r
                    }
                    BinOp::Pow => libm::pow(l, r),
                }
            }
            Node::Call(f, a) => {
                let x = a.eval(env)?;
                match f {
                    Func::Sin => libm::sin(x),
                    Func::Cos => libm::cos(x),
                    Func::Exp => libm::exp(x),
                    Func::Log => {
                        if !(x > 0.0) {
                            return Err(EvalError::LogDomain(x));
                        }
                        libm::log(x)
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtDomain(x));
                        }
                        libm::sqrt(x)
                    }
                    Func::Abs => libm::fabs(x),
                    Func::Floor => libm::floor(x),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn write(&self, out: &mut fmt::Formatter<'_>, scope: &Scope) -> fmt::Result {
        match self {
            Node::Num(v) => write!(out, "{v}"),
            Node::Const(c) => out.write_str(c.name()),
            Node::Var(Var::Domain(i)) if scope.domain_dim == 1 && *i == 0 => out.write_str("x"),
            Node::Var(Var::Domain(i)) => write!(out, "x{}", i + 1),
            Node::Var(Var::Codomain(i)) if scope.codomain_dim == 1 && *i == 0 => {
                out.write_str("y")
            }
            Node::Var(Var::Codomain(i)) => write!(out, "y{}", i + 1),
            Node::Var(Var::Probe) => out.write_str("s"),
            Node::Neg(a) => {
                out.write_str("-")?;
                a.write_wrapped(out, scope, a.precedence() < PREC_UNARY)
            }
            Node::Call(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(out, scope)?;
                out.write_str(")")
            }
            Node::Binary(op, a, b) => {
                let own = self.precedence();
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    (a.precedence() <= PREC_POWER, b.precedence() < PREC_UNARY)
                } else {
                    (a.precedence() < own, b.precedence() <= own)
                };
                a.write_wrapped(out, scope, left_parens)?;
                write!(out, "{}", op.symbol())?;
                b.write_wrapped(out, scope, right_parens)
            }
        }
    }

    fn write_wrapped(
        &self,
        out: &mut fmt::Formatter<'_>,
        scope: &Scope,
        parens: bool,
    ) -> fmt::Result {
        if parens {
            out.write_str("(")?;
            self.write(out, scope)?;
            out.write_str(")")
        } else {
            self.write(out, scope)
        }
    }
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub s: Option<f64>,
}

impl Env<'_> {
    fn lookup(&self, var: Var) -> Result<f64, EvalError> {
        match var {
            Var::Domain(i) => self.x.get(i).copied(),
            Var::Codomain(i) => self.y.get(i).copied(),
            Var::Probe => self.s,
        }
        .ok_or(EvalError::Unbound(var))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("log of non-positive argument {0}")]
    LogDomain(f64),
    #[error("sqrt of negative argument {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("unbound variable {0:?}")]
    Unbound(Var),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    VariableOutOfScope(String),
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            ParseErrorKind::VariableOutOfScope(s) => write!(f, "variable {s:?} not in scope"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number {s:?}"),
        }
    }
}

/// A parsed expression together with the scope it was parsed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    scope: Scope,
}

impl Expression {
    /// Parses `text` in the given scope.
    pub fn parse(text: &str, scope: Scope) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(ParseError { offset: 0, kind: ParseErrorKind::Empty });
        }
        let mut parser = Parser { tokens, pos: 0, scope, end: text.len() };
        let root = parser.sum()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::UnexpectedToken(tok.kind.describe()),
            });
        }
        Ok(Expression { root, scope })
    }

    /// Wraps an existing tree; fails if the tree uses variables outside `scope`.
    pub fn from_node(root: Node, scope: Scope) -> Option<Self> {
        root.fits(&scope).then_some(Expression { root, scope })
    }

    pub fn constant(value: f64) -> Self {
        Expression { root: Node::Num(value), scope: Scope::domain(0) }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// True when the expression references no variables.
    pub fn is_constant(&self) -> bool {
        !self.root.has_vars()
    }

    /// True when every variable used is allowed by `scope`.
    pub fn fits(&self, scope: &Scope) -> bool {
        self.root.fits(scope)
    }

    /// Returns the same tree re-labelled with a different scope.
    pub fn rescoped(&self, scope: Scope) -> Option<Self> {
        Expression::from_node(self.root.clone(), scope)
    }

    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        self.root.eval(env)
    }

    pub fn eval_x(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.root.eval(&Env { x, ..Env::default() })
    }

    pub fn eval_y(&self, y: f64) -> Result<f64, EvalError> {
        self.root.eval(&Env { y: core::slice::from_ref(&y), ..Env::default() })
    }

    pub fn eval_s(&self, s: f64) -> Result<f64, EvalError> {
        self.root.eval(&Env { s: Some(s), ..Env::default() })
    }

    pub fn eval_xs(&self, x: &[f64], s: f64) -> Result<f64, EvalError> {
        self.root.eval(&Env { x, s: Some(s), ..Env::default() })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.scope)
    }
}

/// Parses `text` with domain variables of dimension `d`.
pub fn parse_expression(text: &str, d: usize) -> Result<Expression, ParseError> {
    Expression::parse(text, Scope::domain(d))
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => v.to_string(),
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Caret => "^".into(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    // Exponent only if digits follow; otherwise `e` is left for the
                    // next token and rejected by the parser.
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal = &text[start..i];
                let value = literal.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(
                    ParseError {
                        offset: start,
                        kind: ParseErrorKind::BadNumber(literal.into()),
                    },
                )?;
                tokens.push(Token { kind: TokenKind::Number(value), offset: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].into()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError { offset: start, kind: ParseErrorKind::UnexpectedChar(ch) });
            }
        };
        tokens.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Scope,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or(ParseError { offset: self.end, kind: ParseErrorKind::UnexpectedEnd })?;
        self.pos += 1;
        Ok(tok)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        let tok = self.next()?;
        if tok.kind == kind {
            Ok(())
        } else {
            Err(ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::UnexpectedToken(tok.kind.describe()),
            })
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(&TokenKind::Minus) {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exponent = self.unary()?;
            Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = self.next()?;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Num(v)),
            TokenKind::LParen => {
                let inner = self.sum()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(TokenKind::LParen)?;
                    let arg = self.sum()?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                self.identifier(&name, tok.offset)
            }
            other => Err(ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::UnexpectedToken(other.describe()),
            }),
        }
    }

    fn identifier(&self, name: &str, offset: usize) -> Result<Node, ParseError> {
        let out_of_scope =
            || ParseError { offset, kind: ParseErrorKind::VariableOutOfScope(name.into()) };
        match name {
            "pi" => return Ok(Node::Const(Constant::Pi)),
            "e" => return Ok(Node::Const(Constant::E)),
            "s" => return if self.scope.probe { Ok(Node::Var(Var::Probe)) } else { Err(out_of_scope()) },
            "x" => {
                return if self.scope.domain_dim == 1 {
                    Ok(Node::Var(Var::Domain(0)))
                } else {
                    Err(out_of_scope())
                }
            }
            "y" => {
                return if self.scope.codomain_dim == 1 {
                    Ok(Node::Var(Var::Codomain(0)))
                } else {
                    Err(out_of_scope())
                }
            }
            _ => {}
        }
        let (prefix, digits) = name.split_at(1);
        let indexed = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && !digits.starts_with('0');
        if indexed && (prefix == "x" || prefix == "y") {
            let index = digits.parse::<usize>().map_err(|_| out_of_scope())?;
            let (limit, var) = if prefix == "x" {
                (self.scope.domain_dim, Var::Domain(index - 1))
            } else {
                (self.scope.codomain_dim, Var::Codomain(index - 1))
            };
            return if index <= limit { Ok(Node::Var(var)) } else { Err(out_of_scope()) };
        }
        Err(ParseError { offset, kind: ParseErrorKind::UnknownIdentifier(name.into()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1(text: &str) -> Expression {
        parse_expression(text, 1).unwrap()
    }

    #[test]
    fn affine_evaluates() {
        assert_eq!(x1("2*x+1").eval_x(&[2.0]).unwrap(), 5.0);
    }

    #[test]
    fn implicit_multiplication_is_rejected() {
        assert!(parse_expression("n x - 1", 1).is_err());
        let err = parse_expression("2 x", 1).unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(matches!(err.kind, ParseErrorKind::UnexpectedToken(_)));
    }

    #[test]
    fn two_dimensional_norm() {
        let e = parse_expression("sqrt(x1^2+x2^2)", 2).unwrap();
        assert_eq!(e.eval_x(&[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = x1("-x^2");
        assert_eq!(e.eval_x(&[3.0]).unwrap(), -9.0);
        assert_eq!(x1("2^3^2").eval_x(&[0.0]).unwrap(), 512.0);
        assert_eq!(x1("8/4/2").eval_x(&[0.0]).unwrap(), 1.0);
        assert_eq!(x1("1-2-3").eval_x(&[0.0]).unwrap(), -4.0);
        assert_eq!(x1("2^-1").eval_x(&[0.0]).unwrap(), 0.5);
        assert_eq!(x1("-2*3+4").eval_x(&[0.0]).unwrap(), -2.0);
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse_expression("x + $", 1).unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expression("x3", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::VariableOutOfScope("x3".into()));
        let err = parse_expression("x0", 2).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
        let err = parse_expression("foo(x)", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        let err = parse_expression("(x", 1).unwrap_err();
        assert_eq!(err, ParseError { offset: 2, kind: ParseErrorKind::UnexpectedEnd });
        assert_eq!(parse_expression("  ", 1).unwrap_err().kind, ParseErrorKind::Empty);
        assert!(parse_expression("x", 2).is_err());
        assert!(parse_expression("sin x", 1).is_err());
    }

    #[test]
    fn domain_errors_are_not_nan() {
        assert_eq!(x1("log(x)").eval_x(&[0.0]), Err(EvalError::LogDomain(0.0)));
        assert_eq!(x1("sqrt(x)").eval_x(&[-1.0]), Err(EvalError::SqrtDomain(-1.0)));
        assert_eq!(x1("1/x").eval_x(&[0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(x1("x^0.5").eval_x(&[-1.0]), Err(EvalError::NonFinite));
        assert_eq!(x1("exp(x)").eval_x(&[1000.0]), Err(EvalError::NonFinite));
    }

    #[test]
    fn scopes() {
        let beta = Expression::parse("s^2", Scope::probe()).unwrap();
        assert_eq!(beta.eval_s(3.0).unwrap(), 9.0);
        let psi = Expression::parse("x*s", Scope::caratheodory(1)).unwrap();
        assert_eq!(psi.eval_xs(&[2.0], 3.0).unwrap(), 6.0);
        let inv = Expression::parse("(y+1)/2", Scope::codomain(1)).unwrap();
        assert_eq!(inv.eval_y(0.5).unwrap(), 0.75);
        assert!(beta.eval_x(&[1.0]).is_err());
        assert!(Expression::parse("s", Scope::domain(1)).is_err());
    }

    #[test]
    fn constants_and_functions() {
        let e = x1("floor(2.7) + abs(-1) + cos(pi) + log(e)");
        assert!((e.eval_x(&[0.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(x1("3*pi").is_constant());
        assert!(!x1("3*x").is_constant());
        assert_eq!(x1("1.5e2").eval_x(&[0.0]).unwrap(), 150.0);
        assert_eq!(x1(".25").eval_x(&[0.0]).unwrap(), 0.25);
    }

    #[test]
    fn printing_is_minimal_and_reparses() {
        for (text, printed) in [
            ("2*x+1", "2*x+1"),
            ("(x+1)*(x-1)", "(x+1)*(x-1)"),
            ("x-(x-1)", "x-(x-1)"),
            ("-(x^2)", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("(x^2)^3", "(x^2)^3"),
            ("x^2^3", "x^2^3"),
            ("x^-1", "x^-1"),
            ("--x", "--x"),
            ("sqrt(x+1)", "sqrt(x+1)"),
        ] {
            let e = x1(text);
            assert_eq!(e.to_string(), printed, "{text}");
            assert_eq!(x1(&e.to_string()), e);
        }
        let e = parse_expression("x1*x2", 2).unwrap();
        assert_eq!(e.to_string(), "x1*x2");
    }
}
