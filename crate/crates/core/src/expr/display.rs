use std::fmt;

use super::Expr;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Mul(..) | Expr::Div(..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Const(c) if c.is_sign_negative() => UNARY,
        Expr::Pow(..) => POWER,
        _ => ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints in the parser's grammar with the fewest parentheses that
/// reproduce the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Param(p) => f.write_str(p),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_at(f, a, UNARY)
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Add(a, b) => {
                write_at(f, a, SUM)?;
                f.write_str(" + ")?;
                write_at(f, b, PRODUCT)
            }
            Expr::Sub(a, b) => {
                write_at(f, a, SUM)?;
                f.write_str(" - ")?;
                write_at(f, b, PRODUCT)
            }
            Expr::Mul(a, b) => {
                write_at(f, a, PRODUCT)?;
                f.write_str("*")?;
                write_at(f, b, UNARY)
            }
            Expr::Div(a, b) => {
                write_at(f, a, PRODUCT)?;
                f.write_str("/")?;
                write_at(f, b, UNARY)
            }
            Expr::Pow(a, b) => {
                write_at(f, a, ATOM)?;
                f.write_str("^")?;
                write_at(f, b, POWER)
            }
        }
    }
}
