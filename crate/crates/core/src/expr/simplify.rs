//! Best-effort simplification: constant folding, 0/1 identities, like-term
//! collection on flattened sums and like-base collection on flattened
//! products. No expansion or factoring is attempted.

use std::cmp::Ordering;

use super::{Env, Expr, ParamValues};

impl Expr {
    pub fn simplify(&self) -> Expr {
        simplify(self)
    }
}

pub(crate) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(_) | Expr::Add(..) | Expr::Sub(..) => normalize_sum(e),
        Expr::Mul(..) | Expr::Div(..) => normalize_product(e),
        Expr::Exp(a) => {
            let a = simplify(a);
            match a {
                Expr::Const(c) => fold(Expr::Const(c).exp()),
                a => a.exp(),
            }
        }
        Expr::Ln(a) => {
            let a = simplify(a);
            match a {
                Expr::Exp(inner) => *inner,
                Expr::Const(c) => fold(Expr::Const(c).ln()),
                a => a.ln(),
            }
        }
        Expr::Pow(b, x) => pow(simplify(b), simplify(x)),
    }
}

/// Folds a node whose children are constants, keeping it symbolic when the
/// value is undefined.
fn fold(e: Expr) -> Expr {
    let empty = ParamValues::new();
    match e.eval(&Env::new(&empty)) {
        Ok(v) => Expr::Const(v),
        Err(_) => e,
    }
}

fn pow(base: Expr, exponent: Expr) -> Expr {
    match (&base, &exponent) {
        (_, Expr::Const(k)) if *k == 1.0 => base,
        (_, Expr::Const(k)) if *k == 0.0 => Expr::one(),
        (Expr::Const(b), _) if *b == 1.0 => Expr::one(),
        (Expr::Const(_), Expr::Const(_)) => fold(base.pow(exponent)),
        (Expr::Pow(inner, k), Expr::Const(m)) if m.fract() == 0.0 && k.as_const().is_some() => {
            let k = k.as_const().unwrap_or(1.0);
            pow((**inner).clone(), Expr::Const(k * m))
        }
        _ => base.pow(exponent),
    }
}

// ---- sums ------------------------------------------------------------------

fn collect_sum(e: &Expr, sign: f64, terms: &mut Vec<(f64, Expr)>, constant: &mut f64) {
    match e {
        Expr::Add(a, b) => {
            collect_sum(a, sign, terms, constant);
            collect_sum(b, sign, terms, constant);
        }
        Expr::Sub(a, b) => {
            collect_sum(a, sign, terms, constant);
            collect_sum(b, -sign, terms, constant);
        }
        Expr::Neg(a) => collect_sum(a, -sign, terms, constant),
        Expr::Const(c) => *constant += sign * c,
        _ => {
            let (c, rest) = split_coefficient(e);
            match rest {
                None => *constant += sign * c,
                Some(t) => terms.push((sign * c, t)),
            }
        }
    }
}

/// Splits a normalized term into numeric coefficient and symbolic rest.
fn split_coefficient(e: &Expr) -> (f64, Option<Expr>) {
    match e {
        Expr::Const(c) => (*c, None),
        Expr::Neg(a) => {
            let (c, r) = split_coefficient(a);
            (-c, r)
        }
        Expr::Mul(a, b) => {
            if let Expr::Const(c) = **a {
                let (d, r) = split_coefficient(b);
                return (c * d, r);
            }
            (1.0, Some(e.clone()))
        }
        Expr::Div(n, d) => {
            let (c, r) = split_coefficient(n);
            let num = r.unwrap_or_else(Expr::one);
            (c, Some(num / (**d).clone()))
        }
        _ => (1.0, Some(e.clone())),
    }
}

fn normalize_sum(e: &Expr) -> Expr {
    let simplified = match e {
        Expr::Neg(a) => Expr::Neg(Box::new(simplify(a))),
        Expr::Add(a, b) => simplify(a) + simplify(b),
        Expr::Sub(a, b) => simplify(a) - simplify(b),
        _ => unreachable!("normalize_sum called on non-sum"),
    };
    let mut raw = Vec::new();
    let mut constant = 0.0;
    collect_sum(&simplified, 1.0, &mut raw, &mut constant);

    let mut terms: Vec<(f64, Expr)> = Vec::with_capacity(raw.len());
    for (c, t) in raw {
        match terms.iter_mut().find(|(_, u)| *u == t) {
            Some(slot) => slot.0 += c,
            None => terms.push((c, t)),
        }
    }
    terms.retain(|(c, _)| *c != 0.0);
    terms.sort_by(|a, b| canonical_cmp(&a.1, &b.1));

    let mut out: Option<Expr> = None;
    for (c, t) in terms {
        out = Some(match out {
            None => scaled(c, t),
            Some(acc) if c < 0.0 => acc - scaled(-c, t),
            Some(acc) => acc + scaled(c, t),
        });
    }
    match out {
        None => Expr::Const(constant),
        Some(acc) if constant == 0.0 => acc,
        Some(acc) if constant < 0.0 => acc - Expr::Const(-constant),
        Some(acc) => acc + Expr::Const(constant),
    }
}

fn scaled(c: f64, t: Expr) -> Expr {
    if c == 1.0 {
        t
    } else if c == -1.0 {
        -t
    } else if matches!(t, Expr::Mul(..) | Expr::Div(..)) {
        normalize_product(&(Expr::Const(c) * t))
    } else {
        Expr::Const(c) * t
    }
}

// ---- products --------------------------------------------------------------

fn collect_product(e: &Expr, sign: f64, factors: &mut Vec<(Expr, f64)>, coef: &mut f64) {
    match e {
        Expr::Mul(a, b) => {
            collect_product(a, sign, factors, coef);
            collect_product(b, sign, factors, coef);
        }
        Expr::Div(a, b) => {
            collect_product(a, sign, factors, coef);
            collect_product(b, -sign, factors, coef);
        }
        Expr::Neg(a) => {
            *coef = -*coef;
            collect_product(a, sign, factors, coef);
        }
        Expr::Const(c) if sign > 0.0 || *c != 0.0 => *coef *= c.powf(sign),
        Expr::Pow(b, k) => match **k {
            Expr::Const(k) => factors.push(((**b).clone(), k * sign)),
            _ => factors.push((e.clone(), sign)),
        },
        _ => factors.push((e.clone(), sign)),
    }
}

fn normalize_product(e: &Expr) -> Expr {
    let simplified = match e {
        Expr::Mul(a, b) => simplify(a) * simplify(b),
        Expr::Div(a, b) => simplify(a) / simplify(b),
        _ => unreachable!("normalize_product called on non-product"),
    };
    let mut raw = Vec::new();
    let mut coef = 1.0;
    collect_product(&simplified, 1.0, &mut raw, &mut coef);
    if coef == 0.0 {
        return Expr::zero();
    }
    if !coef.is_finite() {
        return simplified;
    }

    let mut factors: Vec<(Expr, f64)> = Vec::with_capacity(raw.len());
    for (b, k) in raw {
        match factors.iter_mut().find(|(c, _)| *c == b) {
            Some(slot) => slot.1 += k,
            None => factors.push((b, k)),
        }
    }
    factors.retain(|(_, k)| *k != 0.0);
    factors.sort_by(|a, b| canonical_cmp(&a.0, &b.0));

    let power = |b: Expr, k: f64| if k == 1.0 { b } else { b.pow(k) };
    let chain = |fs: Vec<Expr>| fs.into_iter().reduce(|acc, f| acc * f);

    let mut num = Vec::new();
    let mut den = Vec::new();
    if coef.abs() != 1.0 {
        num.push(Expr::Const(coef.abs()));
    }
    for (b, k) in factors {
        if k > 0.0 {
            num.push(power(b, k));
        } else {
            den.push(power(b, -k));
        }
    }
    let numerator = chain(num).unwrap_or_else(Expr::one);
    let body = match chain(den) {
        Some(d) => numerator / d,
        None => numerator,
    };
    if coef < 0.0 {
        match body {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Mul(a, b) if matches!(*a, Expr::Const(_)) => {
                Expr::Const(-a.as_const().unwrap_or(1.0)) * *b
            }
            body => -body,
        }
    } else {
        body
    }
}

// ---- ordering --------------------------------------------------------------

fn rank(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) => 0,
        Expr::Var(_) => 1,
        Expr::Param(_) => 2,
        Expr::Pow(..) => 3,
        Expr::Mul(..) => 4,
        Expr::Div(..) => 5,
        Expr::Add(..) => 6,
        Expr::Sub(..) => 7,
        Expr::Neg(_) => 8,
        Expr::Exp(_) => 9,
        Expr::Ln(_) => 10,
    }
}

/// Total structural order used to canonicalize sums and products.
pub(crate) fn canonical_cmp(a: &Expr, b: &Expr) -> Ordering {
    let r = rank(a).cmp(&rank(b));
    if r != Ordering::Equal {
        return r;
    }
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => x.total_cmp(y),
        (Expr::Var(x), Expr::Var(y)) => x.cmp(y),
        (Expr::Param(x), Expr::Param(y)) => x.cmp(y),
        (Expr::Neg(x), Expr::Neg(y)) | (Expr::Exp(x), Expr::Exp(y)) | (Expr::Ln(x), Expr::Ln(y)) => {
            canonical_cmp(x, y)
        }
        (Expr::Add(a1, a2), Expr::Add(b1, b2))
        | (Expr::Sub(a1, a2), Expr::Sub(b1, b2))
        | (Expr::Mul(a1, a2), Expr::Mul(b1, b2))
        | (Expr::Div(a1, a2), Expr::Div(b1, b2))
        | (Expr::Pow(a1, a2), Expr::Pow(b1, b2)) => {
            canonical_cmp(a1, b1).then_with(|| canonical_cmp(a2, b2))
        }
        _ => Ordering::Equal,
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Point};

    fn simp(text: &str) -> String {
        parse(text).unwrap().simplify().to_string()
    }

    #[test]
    fn folds_constants_and_identities() {
        assert_eq!(simp("2 + 3*4"), "14");
        assert_eq!(simp("0*x1 + 1*x2 + x3^1 - 0"), "x2 + x3");
        assert_eq!(simp("x1^0"), "1");
        assert_eq!(simp("ln(1) + exp(0)"), "1");
        assert_eq!(simp("--x1"), "x1");
        assert_eq!(simp("x1/1"), "x1");
        assert_eq!(simp("ln(exp(x2))"), "x2");
    }

    #[test]
    fn cancels_like_terms() {
        assert_eq!(simp("x1 - x1"), "0");
        assert_eq!(simp("x1*x2 - x2*x1"), "0");
        assert_eq!(simp("2*x1 + 3*x1 - x2"), "5*x1 - x2");
        assert_eq!(simp("x1*x1*x1/x1"), "x1^2");
        assert_eq!(simp("(x1 + x2) - (x2 + x1)"), "0");
    }

    #[test]
    fn keeps_undefined_constants_symbolic() {
        assert_eq!(simp("ln(-1)"), "ln(-1)");
        assert_eq!(simp("1/0"), "1/0");
    }

    #[test]
    fn preserves_value() {
        let e = parse("(3*x1 - 2*x1*x2)/(x2*x1) + x3^2*x3^-1 - exp(x1)*2").unwrap();
        let s = e.simplify();
        let p = Point::new([0.7, 1.3, -0.4]);
        let (a, b) = (e.eval_at(&p).unwrap(), s.eval_at(&p).unwrap());
        assert!((a - b).abs() < 1e-12, "{a} vs {b} for {s}");
    }
}
