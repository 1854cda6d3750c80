//! A small symbolic expression engine.
//!
//! Expressions are trees over the coordinates `x1, x2, x3`, the reserved
//! auxiliary symbols `k1, k2, k3` (arguments of family generators) and
//! `y1, y2, y3` (transformed coordinates), named real parameters and real
//! constants. Supported operations are parsing, evaluation, exact symbolic
//! differentiation and a best-effort simplifier. Whether an expression is
//! identically zero is decided by sampling (see [`is_zero_on`]), never by
//! the simplifier.

mod diff;
mod display;
mod domain;
mod parse;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

pub use domain::{Domain, Parameters, Point};
pub use parse::{parse, parse_declared};

/// A symbol that is not a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X1,
    X2,
    X3,
    K1,
    K2,
    K3,
    Y1,
    Y2,
    Y3,
}

impl Var {
    pub const ALL: [Var; 9] = [
        Var::X1,
        Var::X2,
        Var::X3,
        Var::K1,
        Var::K2,
        Var::K3,
        Var::Y1,
        Var::Y2,
        Var::Y3,
    ];
    pub const X: [Var; 3] = [Var::X1, Var::X2, Var::X3];
    pub const Y: [Var; 3] = [Var::Y1, Var::Y2, Var::Y3];
    pub const K: [Var; 3] = [Var::K1, Var::K2, Var::K3];

    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::X3 => "x3",
            Var::K1 => "k1",
            Var::K2 => "k2",
            Var::K3 => "k3",
            Var::Y1 => "y1",
            Var::Y2 => "y2",
            Var::Y3 => "y3",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Slot in an [`Env`] variable table.
    pub fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A coordinate system: which variable triple an expression is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Chart {
    #[default]
    X,
    Y,
}

impl Chart {
    pub fn vars(self) -> [Var; 3] {
        match self {
            Chart::X => Var::X,
            Chart::Y => Var::Y,
        }
    }

    pub fn var(self, i: usize) -> Var {
        self.vars()[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Param(String),
    Var(Var),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with an exponent that is constant in every variable.
    Pow(Box<Expr>, Box<Expr>),
}

pub type ParamValues = BTreeMap<String, f64>;

/// Evaluation environment: values for the nine variables and the parameters.
#[derive(Debug, Clone)]
pub struct Env<'a> {
    vars: [Option<f64>; 9],
    params: &'a ParamValues,
    guard: Option<f64>,
}

impl<'a> Env<'a> {
    pub fn new(params: &'a ParamValues) -> Self {
        Env {
            vars: [None; 9],
            params,
            guard: None,
        }
    }

    /// Binds the three variables of `chart` to `coords`.
    pub fn at(params: &'a ParamValues, chart: Chart, coords: [f64; 3]) -> Self {
        let mut env = Env::new(params);
        env.bind_chart(chart, coords);
        env
    }

    pub fn bind(&mut self, var: Var, value: f64) -> &mut Self {
        self.vars[var.slot()] = Some(value);
        self
    }

    pub fn bind_chart(&mut self, chart: Chart, coords: [f64; 3]) -> &mut Self {
        for (v, c) in chart.vars().into_iter().zip(coords) {
            self.bind(v, c);
        }
        self
    }

    /// Rejects evaluations in which any intermediate value exceeds `limit`
    /// in magnitude.
    pub fn with_guard(mut self, limit: f64) -> Self {
        self.guard = Some(limit);
        self
    }

    /// Copy of this environment (same parameters and guard) with the
    /// variables of `chart` rebound.
    pub fn with_chart(&self, chart: Chart, coords: [f64; 3]) -> Env<'a> {
        let mut env = self.clone();
        env.bind_chart(chart, coords);
        env
    }

    pub fn var(&self, var: Var) -> Option<f64> {
        self.vars[var.slot()]
    }

    /// Values of the three variables of `chart`, if all are bound.
    pub fn coords(&self, chart: Chart) -> Option<[f64; 3]> {
        let [a, b, c] = chart.vars().map(|v| self.var(v));
        Some([a?, b?, c?])
    }

    pub fn params(&self) -> &ParamValues {
        self.params
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn pow(self, exponent: impl Into<Expr>) -> Expr {
        Expr::Pow(Box::new(self), Box::new(exponent.into()))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, value: f64) -> bool {
        self.as_const() == Some(value)
    }

    /// Evaluates the expression. Partial functions report domain errors
    /// instead of producing NaN or infinities.
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Param(name) => *env
                .params
                .get(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Var(v) => env
                .var(*v)
                .ok_or_else(|| EvalError::Unbound(v.name().to_string()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Exp(a) => a.eval(env)?.exp(),
            Expr::Ln(a) => {
                let x = a.eval(env)?;
                if x <= 0.0 {
                    return Err(EvalError::Domain(format!("ln of non-positive value {x}")));
                }
                x.ln()
            }
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let num = a.eval(env)?;
                let den = b.eval(env)?;
                if den == 0.0 {
                    return Err(EvalError::Domain("division by zero".into()));
                }
                num / den
            }
            Expr::Pow(a, b) => power(a.eval(env)?, b.eval(env)?)?,
        };
        if !value.is_finite() {
            return Err(EvalError::Domain(format!("non-finite value in `{self}`")));
        }
        if let Some(limit) = env.guard {
            if value.abs() > limit {
                return Err(EvalError::Guard(value));
            }
        }
        Ok(value)
    }

    /// Evaluates at a [`Point`] in the x-chart.
    pub fn eval_at(&self, point: &Point) -> Result<f64, EvalError> {
        self.eval(&Env::at(&point.params, Chart::X, point.x))
    }

    /// Replaces variables according to `map`; unmapped variables are kept.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Var(v) => map(*v),
            _ => None,
        })
    }

    /// Substitutes the given variables.
    pub fn subst(&self, pairs: &[(Var, &Expr)]) -> Expr {
        self.substitute(&|v| pairs.iter().find(|(w, _)| *w == v).map(|(_, e)| (*e).clone()))
    }

    /// Rewrites the three variables of `from` into the expressions `to`.
    pub fn subst_chart(&self, from: Chart, to: &[Expr; 3]) -> Expr {
        let vars = from.vars();
        self.subst(&[(vars[0], &to[0]), (vars[1], &to[1]), (vars[2], &to[2])])
    }

    /// Renames the coordinates of chart `from` to those of chart `to`.
    pub fn rename_chart(&self, from: Chart, to: Chart) -> Expr {
        let targets = to.vars().map(Expr::Var);
        self.subst_chart(from, &targets)
    }

    /// Replaces parameters that have a value in `values` by constants.
    pub fn bind_params(&self, values: &ParamValues) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Param(name) => values.get(name).map(|c| Expr::Const(*c)),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        let un = |a: &Expr| Box::new(a.map_leaves(f));
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) => f(self).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(un(a)),
            Expr::Exp(a) => Expr::Exp(un(a)),
            Expr::Ln(a) => Expr::Ln(un(a)),
            Expr::Add(a, b) => Expr::Add(un(a), un(b)),
            Expr::Sub(a, b) => Expr::Sub(un(a), un(b)),
            Expr::Mul(a, b) => Expr::Mul(un(a), un(b)),
            Expr::Div(a, b) => Expr::Div(un(a), un(b)),
            Expr::Pow(a, b) => Expr::Pow(un(a), un(b)),
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, var: Var) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Var(v) if *v == var));
        found
    }

    pub fn is_variable_free(&self) -> bool {
        self.vars().is_empty()
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::Domain("zero raised to a negative power".into()));
        }
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 {
        return Err(EvalError::Domain(format!(
            "non-integer power {exponent} of negative base {base}"
        )));
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::Domain("zero raised to a negative power".into()));
    }
    Ok(base.powf(exponent))
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Box::new(self.clone()), Box::new(rhs.clone()))
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs.clone()))
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self.clone()), Box::new(rhs))
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
        Expr::Neg(Box::new(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self.clone()))
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::error::ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Outcome of a sampling-based zero test.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroVerdict {
    Zero,
    NonZero(crate::verify::Witness),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero)
    }
}

/// Decides whether `e` vanishes on `domain` by evaluating it at
/// `cfg.points` seeded sample points.
pub fn is_zero_on(
    e: &Expr,
    domain: &Domain,
    params: &Parameters,
    cfg: &crate::verify::SamplingConfig,
) -> crate::Result<ZeroVerdict> {
    let report = crate::verify::sample_expr(e, domain, params, cfg)?;
    Ok(match report.witness {
        Some(w) => ZeroVerdict::NonZero(w),
        None => ZeroVerdict::Zero,
    })
}
