//! Arithmetic expressions over named variables.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! So `-x^2` is `-(x^2)` and `a^b^c` is `a^(b^c)`. Known functions are
//! `sin`, `cos`, `exp`, `log` and `sqrt`.
//!
//! Expressions are evaluated over any [`Scalar`]; [`Expression::evaluate_with_partials`]
//! uses [`Dual`] numbers so the partials are exact, not finite differences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::{Dual, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => {
                Some(*offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    MissingVariable(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("non-finite result")]
    NonFinite,
}

/// Variable name → value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Value plus exact first partials, one per variable the expression references.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedValue {
    pub value: f64,
    pub partials: BTreeMap<String, f64>,
}

impl GradedValue {
    pub fn partial(&self, name: &str) -> f64 {
        self.partials.get(name).copied().unwrap_or(0.0)
    }
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression, ParseError> {
        let tokens = lex(text)?;
        if tokens.len() == 1 {
            return Err(ParseError::Empty);
        }
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        p.expect_end()?;
        Ok(Expression { root })
    }

    pub fn from_node(root: Node) -> Self {
        Expression { root }
    }

    pub fn num(v: f64) -> Self {
        Expression { root: Node::Num(v) }
    }

    pub fn var(name: &str) -> Self {
        Expression {
            root: Node::Var(name.to_string()),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn pow(self, e: Expression) -> Self {
        Expression {
            root: Node::Binary(BinOp::Pow, Box::new(self.root), Box::new(e.root)),
        }
    }

    pub fn call(f: Func, arg: Expression) -> Self {
        Expression {
            root: Node::Call(f, Box::new(arg.root)),
        }
    }

    /// Names of all referenced variables, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_vars(&self.root, &mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.variables().is_empty()
    }

    /// Replaces variables by expressions; unmapped variables are kept.
    pub fn substitute(&self, map: &BTreeMap<String, Expression>) -> Expression {
        Expression {
            root: subst(&self.root, map),
        }
    }

    /// Folds constant subtrees and drops `0·a`, `a + 0`, `a·1` and similar.
    /// Never changes the value where the original is defined.
    pub fn simplify(&self) -> Expression {
        Expression {
            root: simplify_node(&self.root),
        }
    }

    /// Evaluates over any scalar type with a caller-supplied variable lookup.
    pub fn eval_with<T, F>(&self, lookup: &F) -> Result<T, EvalError>
    where
        T: Scalar,
        F: Fn(&str) -> Option<T>,
    {
        eval_node(&self.root, lookup)
    }

    pub fn evaluate(&self, b: &Binding) -> Result<f64, EvalError> {
        self.eval_with(&|n: &str| b.get(n))
    }

    pub fn evaluate_with_partials(&self, b: &Binding) -> Result<GradedValue, EvalError> {
        let value = self.evaluate(b)?;
        let mut partials = BTreeMap::new();
        for var in self.variables() {
            let d: Dual<f64> = self.eval_with(&|n: &str| {
                b.get(n).map(|v| {
                    if n == var {
                        Dual::variable(v)
                    } else {
                        Dual::constant(v)
                    }
                })
            })?;
            if !d.eps.is_finite() {
                return Err(EvalError::NonFinite);
            }
            partials.insert(var, d.eps);
        }
        Ok(GradedValue { value, partials })
    }

    /// Value and gradient with respect to `vars` over a generic scalar, one
    /// forward-mode pass per variable.
    pub fn eval_gradient<T, F>(&self, lookup: &F, vars: &[&str]) -> Result<(T, Vec<T>), EvalError>
    where
        T: Scalar,
        F: Fn(&str) -> Option<T>,
    {
        let value = self.eval_with(lookup)?;
        let mut grad = Vec::with_capacity(vars.len());
        for var in vars {
            let d: Dual<T> = self.eval_with(&|n: &str| {
                lookup(n).map(|v| {
                    if n == *var {
                        Dual::variable(v)
                    } else {
                        Dual::constant(v)
                    }
                })
            })?;
            grad.push(d.eps);
        }
        Ok((value, grad))
    }
}

impl FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

macro_rules! expr_binop {
    ($tr:ident, $m:ident, $op:expr) => {
        impl std::ops::$tr for Expression {
            type Output = Expression;
            fn $m(self, rhs: Expression) -> Expression {
                Expression {
                    root: Node::Binary($op, Box::new(self.root), Box::new(rhs.root)),
                }
            }
        }
    };
}

expr_binop!(Add, add, BinOp::Add);
expr_binop!(Sub, sub, BinOp::Sub);
expr_binop!(Mul, mul, BinOp::Mul);
expr_binop!(Div, div, BinOp::Div);

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            root: Node::Neg(Box::new(self.root)),
        }
    }
}

fn collect_vars(n: &Node, out: &mut BTreeSet<String>) {
    match n {
        Node::Num(_) => {}
        Node::Var(v) => {
            out.insert(v.clone());
        }
        Node::Neg(a) | Node::Call(_, a) => collect_vars(a, out),
        Node::Binary(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn subst(n: &Node, map: &BTreeMap<String, Expression>) -> Node {
    match n {
        Node::Num(v) => Node::Num(*v),
        Node::Var(v) => match map.get(v) {
            Some(e) => e.root.clone(),
            None => Node::Var(v.clone()),
        },
        Node::Neg(a) => Node::Neg(Box::new(subst(a, map))),
        Node::Call(f, a) => Node::Call(*f, Box::new(subst(a, map))),
        Node::Binary(op, a, b) => Node::Binary(*op, Box::new(subst(a, map)), Box::new(subst(b, map))),
    }
}

fn simplify_node(n: &Node) -> Node {
    use BinOp::*;
    match n {
        Node::Num(_) | Node::Var(_) => n.clone(),
        Node::Neg(a) => match simplify_node(a) {
            Node::Num(v) => Node::Num(-v),
            a => Node::Neg(Box::new(a)),
        },
        Node::Call(f, a) => {
            let a = simplify_node(a);
            let folded = Node::Call(*f, Box::new(a.clone()));
            match a {
                Node::Num(_) => match eval_node::<f64, _>(&folded, &|_: &str| None) {
                    Ok(v) => Node::Num(v),
                    Err(_) => folded,
                },
                _ => folded,
            }
        }
        Node::Binary(op, a, b) => {
            let (a, b) = (simplify_node(a), simplify_node(b));
            let num = |n: &Node| match n {
                Node::Num(v) => Some(*v),
                _ => None,
            };
            match (op, num(&a), num(&b)) {
                (_, Some(_), Some(_)) => {
                    let whole = Node::Binary(*op, Box::new(a.clone()), Box::new(b.clone()));
                    match eval_node::<f64, _>(&whole, &|_: &str| None) {
                        Ok(v) => Node::Num(v),
                        Err(_) => whole,
                    }
                }
                (Mul, Some(0.0), _) | (Mul, _, Some(0.0)) => Node::Num(0.0),
                (Div, Some(0.0), _) => Node::Num(0.0),
                (Add, Some(0.0), _) => b,
                (Add | Sub, _, Some(0.0)) => a,
                (Sub, Some(0.0), _) => Node::Neg(Box::new(b)),
                (Mul, Some(1.0), _) => b,
                (Mul | Div, _, Some(1.0)) => a,
                (Pow, _, Some(1.0)) => a,
                _ => Node::Binary(*op, Box::new(a), Box::new(b)),
            }
        }
    }
}

fn is_constant_node(n: &Node) -> bool {
    match n {
        Node::Num(_) => true,
        Node::Var(_) => false,
        Node::Neg(a) | Node::Call(_, a) => is_constant_node(a),
        Node::Binary(_, a, b) => is_constant_node(a) && is_constant_node(b),
    }
}

fn checked<T: Scalar>(v: T) -> Result<T, EvalError> {
    if v.value().is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_node<T, F>(n: &Node, lookup: &F) -> Result<T, EvalError>
where
    T: Scalar,
    F: Fn(&str) -> Option<T>,
{
    match n {
        Node::Num(v) => Ok(T::from_f64(*v)),
        Node::Var(name) => lookup(name).ok_or_else(|| EvalError::MissingVariable(name.clone())),
        Node::Neg(a) => Ok(-eval_node(a, lookup)?),
        Node::Binary(op, a, b) => {
            let x: T = eval_node(a, lookup)?;
            match op {
                BinOp::Add => checked(x + eval_node(b, lookup)?),
                BinOp::Sub => checked(x - eval_node(b, lookup)?),
                BinOp::Mul => checked(x * eval_node(b, lookup)?),
                BinOp::Div => {
                    let y: T = eval_node(b, lookup)?;
                    if y.value() == 0.0 {
                        return Err(EvalError::Domain("division by zero"));
                    }
                    checked(x / y)
                }
                BinOp::Pow => eval_pow(x, b, lookup),
            }
        }
        Node::Call(f, a) => {
            let x: T = eval_node(a, lookup)?;
            let r = match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x.value() <= 0.0 {
                        return Err(EvalError::Domain("log of a non-positive value"));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x.value() < 0.0 {
                        return Err(EvalError::Domain("sqrt of a negative value"));
                    }
                    x.sqrt()
                }
            };
            checked(r)
        }
    }
}

fn no_vars(_: &str) -> Option<f64> {
    None
}

fn eval_pow<T, F>(base: T, exp: &Node, lookup: &F) -> Result<T, EvalError>
where
    T: Scalar,
    F: Fn(&str) -> Option<T>,
{
    let bv = base.value();
    if is_constant_node(exp) {
        let e: f64 = eval_node(exp, &no_vars)?;
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            if bv == 0.0 && e < 0.0 {
                return Err(EvalError::Domain("division by zero"));
            }
            return checked(base.powi(e as i32));
        }
        if bv < 0.0 {
            return Err(EvalError::Domain("non-integer power of a negative value"));
        }
        if bv == 0.0 && e < 0.0 {
            return Err(EvalError::Domain("division by zero"));
        }
        return checked(base.powf(T::from_f64(e)));
    }
    let e: T = eval_node(exp, lookup)?;
    if bv <= 0.0 {
        return Err(EvalError::Domain("variable power of a non-positive value"));
    }
    checked(base.powf(e))
}

fn precedence(n: &Node) -> u8 {
    match n {
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Binary(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_wrapped(n: &Node, wrap: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if wrap {
        write!(f, "(")?;
        write_node(n, f)?;
        write!(f, ")")
    } else {
        write_node(n, f)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(v) => {
            if v.is_sign_negative() {
                write!(f, "(-{})", -v)
            } else {
                write!(f, "{v}")
            }
        }
        Node::Var(name) => write!(f, "{name}"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_wrapped(a, precedence(a) < 3, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            let p = precedence(n);
            match op {
                BinOp::Pow => {
                    write_wrapped(a, precedence(a) < 5, f)?;
                    write!(f, "^")?;
                    write_wrapped(b, precedence(b) < 3, f)
                }
                _ => {
                    write_wrapped(a, precedence(a) < p, f)?;
                    let sym = match op {
                        BinOp::Add => " + ",
                        BinOp::Sub => " - ",
                        BinOp::Mul => "*",
                        BinOp::Div => "/",
                        BinOp::Pow => unreachable!(),
                    };
                    write!(f, "{sym}")?;
                    write_wrapped(b, precedence(b) <= p, f)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
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

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
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
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: vec!["number"],
                    found: format!("`{s}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["number", "identifier", "operator", "parenthesis"],
                    found: format!("`{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

const OPERAND: [&str; 4] = ["number", "identifier", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error(&["operator", "end of input"]))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownFunction {
                        name: name.clone(),
                        offset: at,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.close_paren()?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else {
                    Ok(Node::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            _ => Err(self.error(&OPERAND)),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["operator", "`)`"]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    fn var(s: &str) -> Box<Node> {
        Box::new(Node::Var(s.into()))
    }

    #[test]
    fn simplify_drops_zero_terms() {
        let e = Expression::parse("ux - 0*uxx/2").unwrap().simplify();
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec!["ux".to_string()]);
        let e = Expression::parse("(2 + 3)*x^1 + sqrt(4)*0").unwrap().simplify();
        assert_eq!(e.eval_with(&|n: &str| (n == "x").then_some(1.5)).unwrap(), 7.5);
        assert_eq!(e.variables().len(), 1);
    }

    #[test]
    fn single_power_node() {
        assert_eq!(
            p("v^2").root,
            Node::Binary(BinOp::Pow, var("v"), Box::new(Node::Num(2.0)))
        );
    }

    #[test]
    fn x7_first_order_coefficient_is_three_term_sum() {
        // ((2*v*q1 + h1*q1^2) - 2*p1*q1)
        match p("2*v*q1 + h1*q1^2 - 2*p1*q1").root {
            Node::Binary(BinOp::Sub, lhs, _) => {
                assert!(matches!(*lhs, Node::Binary(BinOp::Add, ..)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn truncated_power_reports_offset() {
        let err = Expression::parse("x^").unwrap_err();
        assert_eq!(err.offset(), Some(2));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_function_and_junk() {
        assert!(matches!(
            Expression::parse("foo(x)"),
            Err(ParseError::UnknownFunction { offset: 0, .. })
        ));
        assert_eq!(Expression::parse("x $ y").unwrap_err().offset(), Some(2));
        assert_eq!(Expression::parse("(x + 1").unwrap_err().offset(), Some(6));
        assert_eq!(Expression::parse("x y").unwrap_err().offset(), Some(2));
        assert_eq!(Expression::parse("   "), Err(ParseError::Empty));
    }

    #[test]
    fn precedence_rules() {
        // unary minus binds looser than ^
        assert_eq!(p("-x^2").root, Node::Neg(Box::new(p("x^2").root)));
        // ^ is right associative
        assert_eq!(p("a^b^c"), p("a^(b^c)"));
        assert_eq!(p("a-b-c"), p("(a-b)-c"));
        assert_eq!(p("a/b*c"), p("(a/b)*c"));
        assert_eq!(p("2^-1").evaluate(&Binding::new()).unwrap(), 0.5);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(p("1.5e-3").evaluate(&Binding::new()).unwrap(), 1.5e-3);
        assert_eq!(p(".25").evaluate(&Binding::new()).unwrap(), 0.25);
        assert_eq!(p("2E2").evaluate(&Binding::new()).unwrap(), 200.0);
    }

    #[test]
    fn evaluate_examples() {
        let b = Binding::new().with("v", 3.0);
        assert_eq!(p("v^2").evaluate(&b).unwrap(), 9.0);
        let b = Binding::new()
            .with("v", 1.0)
            .with("q1", 2.0)
            .with("h1", 0.5)
            .with("p1", 3.0);
        assert_eq!(p("2*v*q1 + h1*q1^2 - 2*p1*q1").evaluate(&b).unwrap(), -6.0);
    }

    #[test]
    fn domain_errors() {
        let b = Binding::new().with("h1", 0.0).with("x", -1.0);
        assert!(matches!(p("1/h1").evaluate(&b), Err(EvalError::Domain(_))));
        assert!(matches!(p("log(x)").evaluate(&b), Err(EvalError::Domain(_))));
        assert!(matches!(p("sqrt(x)").evaluate(&b), Err(EvalError::Domain(_))));
        assert!(matches!(p("x^0.5").evaluate(&b), Err(EvalError::Domain(_))));
        assert!(matches!(p("exp(1000)").evaluate(&b), Err(EvalError::NonFinite)));
        assert_eq!(
            p("y + 1").evaluate(&b),
            Err(EvalError::MissingVariable("y".into()))
        );
        // integer powers of negative values are fine
        assert_eq!(p("x^3").evaluate(&b).unwrap(), -1.0);
    }

    #[test]
    fn partial_examples() {
        let g = p("v^2").evaluate_with_partials(&Binding::new().with("v", 3.0)).unwrap();
        assert_eq!(g.value, 9.0);
        assert_eq!(g.partial("v"), 6.0);
        let b = Binding::new()
            .with("v", 1.0)
            .with("q1", 2.0)
            .with("h1", 0.5)
            .with("p1", 3.0);
        let g = p("2*v*q1 + h1*q1^2 - 2*p1*q1").evaluate_with_partials(&b).unwrap();
        assert_eq!(g.partial("q1"), -2.0);
        assert_eq!(g.partials.len(), 4);
        // extra bindings do not produce partials
        let g = p("v").evaluate_with_partials(&b).unwrap();
        assert_eq!(g.partials.keys().collect::<Vec<_>>(), vec!["v"]);
    }

    #[test]
    fn printing_roundtrips_structurally() {
        for s in [
            "-x^2",
            "(-x)^2",
            "a - (b - c)",
            "a/(b*c)",
            "x^-y",
            "(x^2)^3",
            "--x",
            "-(a + b)*c",
            "sin(x)^2 + cos(2*x)",
            "2*x*(2*u - x*v)",
            "(p1 - h1*p2/2)^2/2",
            "1e-7*x + 1e21",
        ] {
            let e = p(s);
            let again = p(&e.to_string());
            assert_eq!(e, again, "{s} printed as {e}");
        }
    }

    #[test]
    fn substitution_and_builders() {
        let e = p("p1 - h1*p2/2");
        let mut m = BTreeMap::new();
        m.insert("p1".to_string(), Expression::var("ux"));
        m.insert("p2".to_string(), Expression::var("uxx"));
        m.insert("h1".to_string(), Expression::num(0.0));
        let s = e.substitute(&m);
        assert_eq!(
            s.variables().into_iter().collect::<Vec<_>>(),
            vec!["ux".to_string(), "uxx".to_string()]
        );
        let b = Binding::new().with("ux", 1.5).with("uxx", 7.0);
        assert_eq!(s.evaluate(&b).unwrap(), 1.5);
        let c = Expression::num(2.0) * Expression::var("x") + -Expression::var("y");
        assert_eq!(c.evaluate(&Binding::new().with("x", 1.0).with("y", 5.0)).unwrap(), -3.0);
    }
}
