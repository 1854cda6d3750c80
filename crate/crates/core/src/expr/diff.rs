//! Exact symbolic partial derivatives.

use super::{Expr, Var};

impl Expr {
    /// Partial derivative with respect to `var`, simplified.
    pub fn diff(&self, var: Var) -> Expr {
        self.diff_raw(var).simplify()
    }

    /// Partial derivative with only trivial 0/1 folding applied.
    pub fn diff_raw(&self, var: Var) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::zero(),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff_raw(var)),
            Expr::Add(a, b) => add(a.diff_raw(var), b.diff_raw(var)),
            Expr::Sub(a, b) => sub(a.diff_raw(var), b.diff_raw(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff_raw(var), (**b).clone()),
                mul((**a).clone(), b.diff_raw(var)),
            ),
            Expr::Div(a, b) => {
                let da = div(a.diff_raw(var), (**b).clone());
                if !b.depends_on(var) {
                    return da;
                }
                let db = div(
                    mul((**a).clone(), b.diff_raw(var)),
                    (**b).clone().pow(2.0),
                );
                sub(da, db)
            }
            Expr::Pow(b, k) => {
                let lowered = match **k {
                    Expr::Const(c) => Expr::Const(c - 1.0),
                    ref k => k.clone() - Expr::one(),
                };
                let outer = mul((**k).clone(), (**b).clone().pow(lowered));
                mul(outer, b.diff_raw(var))
            }
            Expr::Exp(a) => mul(self.clone(), a.diff_raw(var)),
            Expr::Ln(a) => div(a.diff_raw(var), (**a).clone()),
        }
    }

    /// Gradient in the coordinates `vars`.
    pub fn gradient(&self, vars: [Var; 3]) -> [Expr; 3] {
        vars.map(|v| self.diff(v))
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        a => -a,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        _ => a + b,
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        _ => a - b,
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) | (_, Expr::Const(x)) if *x == 0.0 => Expr::zero(),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => a * b,
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::zero(),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => a / b,
    }
}
