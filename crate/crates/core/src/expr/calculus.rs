//! Symbolic differentiation and light simplification.
//!
//! The simplifier folds constants, removes additive/multiplicative
//! identities and pulls negations out of products. It never reassociates,
//! so a simplified tree is a fixpoint of [`Expr::simplify`].

use super::{Expr, Func, Node};

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => match b.node() {
            Node::Neg(inner) => sub(a, inner.clone()),
            _ => a + b,
        },
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x - y),
        (_, Some(0.0)) => a,
        (Some(0.0), _) => neg(b),
        _ => match b.node() {
            Node::Neg(inner) => add(a, inner.clone()),
            _ => a - b,
        },
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::zero(),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => match (a.node(), b.node()) {
            (Node::Neg(x), Node::Neg(y)) => mul(x.clone(), y.clone()),
            (Node::Neg(x), _) => neg(mul(x.clone(), b)),
            (_, Node::Neg(y)) => neg(mul(a, y.clone())),
            _ => a * b,
        },
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 && (x / y).is_finite() => Expr::constant(x / y),
        (_, Some(1.0)) => a,
        (Some(0.0), y) if y != Some(0.0) => Expr::zero(),
        _ => a / b,
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return a;
    }
    match a.as_const() {
        Some(x) if x.powi(n).is_finite() => Expr::constant(x.powi(n)),
        _ => a.powi(n),
    }
}

fn neg(a: Expr) -> Expr {
    match a.node() {
        Node::Const(x) => Expr::constant(-x),
        Node::Neg(inner) => inner.clone(),
        _ => -a,
    }
}

fn call(f: Func, a: Expr) -> Expr {
    let folded = a
        .as_const()
        .and_then(|_| Expr::call(f, a.clone()).eval(&[]).ok());
    folded.map_or_else(|| Expr::call(f, a), Expr::constant)
}

impl Expr {
    /// Constant folding plus 0/1 identity elimination, bottom-up.
    pub fn simplify(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Add(a, b) => add(a.simplify(), b.simplify()),
            Node::Sub(a, b) => sub(a.simplify(), b.simplify()),
            Node::Mul(a, b) => mul(a.simplify(), b.simplify()),
            Node::Div(a, b) => div(a.simplify(), b.simplify()),
            Node::Pow(a, n) => pow(a.simplify(), *n),
            Node::Neg(a) => neg(a.simplify()),
            Node::Call(f, a) => call(*f, a.simplify()),
        }
    }

    /// Exact partial derivative with respect to coordinate `var`.
    ///
    /// The result is built with the simplifying constructors, so derivative
    /// towers stay small.
    pub fn diff(&self, var: usize) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => add(a.diff(var), b.diff(var)),
            Node::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Node::Mul(a, b) => add(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var))),
            Node::Div(a, b) => {
                let num = sub(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var)));
                div(num, pow(b.clone(), 2))
            }
            Node::Pow(a, n) => {
                let da = a.diff(var);
                if *n == 0 || da.is_zero() {
                    return Expr::zero();
                }
                mul(mul(Expr::constant(*n as f64), pow(a.clone(), n - 1)), da)
            }
            Node::Neg(a) => neg(a.diff(var)),
            Node::Call(f, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => call(Func::Cos, a.clone()),
                    Func::Cos => neg(call(Func::Sin, a.clone())),
                    Func::Exp => self.clone(),
                    Func::Log => return div(da, a.clone()),
                    Func::Sqrt => {
                        return div(da, mul(Expr::constant(2.0), self.clone()));
                    }
                };
                mul(outer, da)
            }
        }
    }

    /// Mixed partial derivative along the listed coordinates, in order.
    pub fn diff_many(&self, vars: &[usize]) -> Expr {
        vars.iter().fold(self.clone(), |e, &v| e.diff(v))
    }
}
