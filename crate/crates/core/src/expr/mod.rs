//! Expression trees for coefficient functions of a chart.
//!
//! An [`Expr`] is an immutable tree over real constants and coordinate
//! variables (by index). Trees are reference counted so derivative towers
//! share their subtrees; cloning is cheap and expressions may be read from
//! several threads at once.

mod calculus;
mod parser;
mod print;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parser::{parse, ParseError, ParseErrorKind};
pub use print::Named;

/// Elementary functions understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    /// Coordinate by zero-based index into the chart.
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Neg(Expr),
    Call(Func, Expr),
}

/// Symbolic scalar function of chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subtree}` at point {point:?}")]
    Domain { subtree: String, point: Vec<f64> },
    #[error("variable index {index} out of range for a point of length {len}")]
    Dimension { index: usize, len: usize },
}

impl Expr {
    pub fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: f64) -> Self {
        Expr::new(Node::Const(value))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Expr::new(Node::Var(index))
    }

    pub fn call(f: Func, arg: Expr) -> Self {
        Expr::new(Node::Call(f, arg))
    }

    pub fn powi(&self, exponent: i32) -> Self {
        Expr::new(Node::Pow(self.clone(), exponent))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// One past the largest variable index used, 0 for constant trees.
    pub fn arity(&self) -> usize {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(i) => i + 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.arity().max(b.arity())
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => a.arity(),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted once per use).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
        }
    }

    /// Evaluates the tree at `point`.
    ///
    /// Any non-finite intermediate value (division by zero, `log` of a
    /// non-positive number, overflow) is reported as [`EvalError::Domain`]
    /// naming the innermost offending subtree.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let value = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => {
                return point.get(*i).copied().ok_or(EvalError::Dimension {
                    index: *i,
                    len: point.len(),
                })
            }
            Node::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Node::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Node::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Node::Div(a, b) => {
                let num = a.eval(point)?;
                let den = b.eval(point)?;
                if den == 0.0 {
                    return Err(self.domain_error(point));
                }
                num / den
            }
            Node::Pow(a, n) => a.eval(point)?.powi(*n),
            Node::Neg(a) => -a.eval(point)?,
            Node::Call(f, a) => {
                let x = a.eval(point)?;
                match f {
                    Func::Log if x <= 0.0 => return Err(self.domain_error(point)),
                    Func::Sqrt if x < 0.0 => return Err(self.domain_error(point)),
                    _ => f.apply(x),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain_error(point))
        }
    }

    fn domain_error(&self, point: &[f64]) -> EvalError {
        EvalError::Domain {
            subtree: self.to_string(),
            point: point.to_vec(),
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::constant(value)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self, None)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::new(Node::$variant(self, rhs))
            }
        }

        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::new(Node::$variant(self.clone(), rhs.clone()))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv() -> Vec<String> {
        vec!["u1".into(), "u2".into()]
    }

    #[test]
    fn eval_product() {
        let e = parse("u1*u2", &uv()).unwrap();
        assert_eq!(e.eval(&[3.0, -2.0]).unwrap(), -6.0);
    }

    #[test]
    fn eval_exp_zero_anywhere() {
        let e = parse("exp(0)", &uv()).unwrap();
        assert_eq!(e.eval(&[0.3, 7.0]).unwrap(), 1.0);
        assert_eq!(e.eval(&[-5.0, 1e3]).unwrap(), 1.0);
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = parse("log(u1)", &uv()).unwrap();
        match e.eval(&[-1.0, 0.0]) {
            Err(EvalError::Domain { subtree, point }) => {
                assert_eq!(subtree, "log(u1)");
                assert_eq!(point, vec![-1.0, 0.0]);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_and_sqrt_negative() {
        let e = parse("1/u1", &uv()).unwrap();
        assert!(matches!(e.eval(&[0.0, 0.0]), Err(EvalError::Domain { .. })));
        let e = parse("sqrt(u2)", &uv()).unwrap();
        assert!(matches!(
            e.eval(&[0.0, -1.0]),
            Err(EvalError::Domain { .. })
        ));
        assert_eq!(e.eval(&[0.0, 4.0]).unwrap(), 2.0);
    }

    #[test]
    fn overflow_is_reported() {
        let e = parse("exp(u1)", &uv()).unwrap();
        assert!(e.eval(&[1e4, 0.0]).is_err());
    }

    #[test]
    fn short_point_is_dimension_error() {
        let e = parse("u2", &uv()).unwrap();
        assert_eq!(
            e.eval(&[1.0]),
            Err(EvalError::Dimension { index: 1, len: 1 })
        );
    }

    #[test]
    fn arity_tracks_largest_variable() {
        assert_eq!(parse("3", &uv()).unwrap().arity(), 0);
        assert_eq!(parse("sin(u1)", &uv()).unwrap().arity(), 1);
        assert_eq!(parse("u1+u2^2", &uv()).unwrap().arity(), 2);
    }
}
