//! Real-valued expression trees: the phenotype language.
//!
//! Expressions are built from constants, the variables x/y/z, the four
//! arithmetic operators, and the unary functions sin, cos, exp, log, sqrt
//! and four radial basis functions sharing one shape constant `c`:
//!
//! | function | definition        |
//! |----------|-------------------|
//! | rbf1     | exp(-c r^2)       |
//! | rbf2     | sqrt(c^2 + r^2)   |
//! | rbf3     | sqrt(1/(c^2+r^2)) |
//! | rbf4     | 1/(c^2 + r^2)     |
//!
//! where `r` is the value of the argument subexpression. Evaluation reports
//! any undefined or non-finite result as a [`DomainError`] instead of
//! propagating NaN/inf. All operations are pure; expressions are immutable
//! and cheap to share.

mod diff;
mod parse;
mod simplify;

pub use diff::differentiate;
pub use parse::{parse_expression, ParseError};
pub use simplify::simplify;

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub fn as_str(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Rbf1,
    Rbf2,
    Rbf3,
    Rbf4,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Rbf1 => "rbf1",
            UnaryFn::Rbf2 => "rbf2",
            UnaryFn::Rbf3 => "rbf3",
            UnaryFn::Rbf4 => "rbf4",
        }
    }

    /// Case-insensitive lookup; the radial basis functions answer to both
    /// the `rbf` and `brf` spellings.
    pub fn from_name(name: &str) -> Option<UnaryFn> {
        let lower = name.to_ascii_lowercase();
        Some(match lower.as_str() {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sqrt" => UnaryFn::Sqrt,
            "rbf1" | "brf1" => UnaryFn::Rbf1,
            "rbf2" | "brf2" => UnaryFn::Rbf2,
            "rbf3" | "brf3" => UnaryFn::Rbf3,
            "rbf4" | "brf4" => UnaryFn::Rbf4,
            _ => return None,
        })
    }
}

/// Shape constant shared by the four radial basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfConfig {
    /// Must be positive.
    pub c: f64,
}

impl RbfConfig {
    pub fn new(c: f64) -> RbfConfig {
        assert!(c > 0.0, "RBF shape constant must be positive");
        RbfConfig { c }
    }
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig { c: 1.0 }
    }
}

/// Variable bindings for evaluation. Unbound variables referenced by an
/// expression surface as [`DomainError::UnboundVariable`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
}

impl Env {
    /// Binds only x — the common case for 1-D problems.
    pub fn x(value: f64) -> Env {
        Env { x: Some(value), y: None, z: None }
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::X => self.x,
            Var::Y => self.y,
            Var::Z => self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of a non-positive value")]
    LogNonPositive,
    #[error("sqrt of a negative value")]
    SqrtNegative,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("variable {0} is not bound")]
    UnboundVariable(Var),
}

/// An expression tree. `Const` values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Var(Var),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Unary(UnaryFn, Box<Expression>),
}

impl Expression {
    pub fn constant(v: f64) -> Expression {
        debug_assert!(v.is_finite());
        Expression::Const(v)
    }

    pub fn var(v: Var) -> Expression {
        Expression::Var(v)
    }

    pub fn binary(op: BinaryOp, left: Expression, right: Expression) -> Expression {
        Expression::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn unary(f: UnaryFn, arg: Expression) -> Expression {
        Expression::Unary(f, Box::new(arg))
    }

    pub fn add(l: Expression, r: Expression) -> Expression {
        Expression::binary(BinaryOp::Add, l, r)
    }

    pub fn sub(l: Expression, r: Expression) -> Expression {
        Expression::binary(BinaryOp::Sub, l, r)
    }

    pub fn mul(l: Expression, r: Expression) -> Expression {
        Expression::binary(BinaryOp::Mul, l, r)
    }

    pub fn div(l: Expression, r: Expression) -> Expression {
        Expression::binary(BinaryOp::Div, l, r)
    }

    pub fn evaluate(&self, env: &Env, rbf: &RbfConfig) -> Result<f64, DomainError> {
        evaluate(self, env, rbf)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expression::Const(_) | Expression::Var(_) => 1,
            Expression::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
            Expression::Unary(_, a) => 1 + a.node_count(),
        }
    }
}

/// Evaluate with real arithmetic; every undefined or non-finite step is a
/// [`DomainError`].
pub fn evaluate(e: &Expression, env: &Env, rbf: &RbfConfig) -> Result<f64, DomainError> {
    let v = match e {
        Expression::Const(c) => *c,
        Expression::Var(var) => env.get(*var).ok_or(DomainError::UnboundVariable(*var))?,
        Expression::Binary(op, l, r) => {
            let a = evaluate(l, env, rbf)?;
            let b = evaluate(r, env, rbf)?;
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b == 0.0 {
                        return Err(DomainError::DivisionByZero);
                    }
                    a / b
                }
            }
        }
        Expression::Unary(f, arg) => {
            let r = evaluate(arg, env, rbf)?;
            let c = rbf.c;
            match f {
                UnaryFn::Sin => r.sin(),
                UnaryFn::Cos => r.cos(),
                UnaryFn::Exp => r.exp(),
                UnaryFn::Log => {
                    if r <= 0.0 {
                        return Err(DomainError::LogNonPositive);
                    }
                    r.ln()
                }
                UnaryFn::Sqrt => {
                    if r < 0.0 {
                        return Err(DomainError::SqrtNegative);
                    }
                    r.sqrt()
                }
                UnaryFn::Rbf1 => (-c * r * r).exp(),
                UnaryFn::Rbf2 => (c * c + r * r).sqrt(),
                UnaryFn::Rbf3 => (1.0 / (c * c + r * r)).sqrt(),
                UnaryFn::Rbf4 => 1.0 / (c * c + r * r),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

/// Infix rendering with the minimal parentheses needed to reparse into the
/// same tree.
pub fn print_expression(e: &Expression) -> String {
    e.to_string()
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f)
    }
}

fn node_precedence(e: &Expression) -> u8 {
    match e {
        Expression::Binary(op, ..) => op.precedence(),
        _ => 3,
    }
}

fn fmt_prec(e: &Expression, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expression::Const(v) => write!(f, "{v}"),
        Expression::Var(v) => write!(f, "{v}"),
        Expression::Unary(func, arg) => write!(f, "{}({})", func.name(), arg),
        Expression::Binary(op, l, r) => {
            // The parser is left-associative, so a right child at equal
            // precedence needs parentheses to survive a round trip.
            if node_precedence(l) < op.precedence() {
                write!(f, "({})", l)?;
            } else {
                fmt_prec(l, f)?;
            }
            write!(f, "{}", op.symbol())?;
            if node_precedence(r) <= op.precedence() {
                write!(f, "({})", r)?;
            } else {
                fmt_prec(r, f)?;
            }
            Ok(())
        }
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_expression(&text).map_err(D::Error::custom)
    }
}
