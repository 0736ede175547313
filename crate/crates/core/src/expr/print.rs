//! Infix printing that re-parses to a structurally identical tree.

use std::fmt;

use super::{Expr, Node};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Const(c) if c.is_sign_negative() => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8, names: Option<&[String]>) -> fmt::Result {
    if level(e) < min {
        f.write_str("(")?;
        write_expr(f, e, names)?;
        f.write_str(")")
    } else {
        write_expr(f, e, names)
    }
}

pub(super) fn write_expr(
    f: &mut fmt::Formatter<'_>,
    e: &Expr,
    names: Option<&[String]>,
) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{c}"),
        Node::Var(i) => match names.and_then(|n| n.get(*i)) {
            Some(name) => f.write_str(name),
            None => write!(f, "u{}", i + 1),
        },
        Node::Add(a, b) | Node::Sub(a, b) => {
            child(f, a, SUM, names)?;
            f.write_str(if matches!(e.node(), Node::Add(..)) {
                " + "
            } else {
                " - "
            })?;
            child(f, b, PRODUCT, names)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            child(f, a, PRODUCT, names)?;
            f.write_str(if matches!(e.node(), Node::Mul(..)) {
                "*"
            } else {
                "/"
            })?;
            child(f, b, UNARY, names)
        }
        Node::Neg(a) => match a.node() {
            Node::Const(c) if !c.is_sign_negative() => write!(f, "-({c})"),
            _ => {
                f.write_str("-")?;
                child(f, a, UNARY, names)
            }
        },
        Node::Pow(a, n) => {
            child(f, a, ATOM, names)?;
            write!(f, "^{n}")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, names)?;
            f.write_str(")")
        }
    }
}

/// Display adapter printing variables with caller-supplied names.
pub struct Named<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl Expr {
    pub fn named<'a>(&'a self, names: &'a [String]) -> Named<'a> {
        Named { expr: self, names }
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, Some(self.names))
    }
}
