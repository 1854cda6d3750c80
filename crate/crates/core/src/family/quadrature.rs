use std::collections::BTreeSet;

use super::{characteristic_field, lambda_of};
use crate::error::{Error, EvalError, Result};
use crate::expr::{Chart, Env, Expr, ParamValues, Var};
use crate::poisson::StructureMatrix;
use crate::verify::{sample_residual, SamplingConfig, TrajectoryQuantity, VerificationReport};
use crate::family::TrajectorySample;

/// Smallest admissible magnitude of the pivot's characteristic component.
pub const SINGULAR_GUARD: f64 = 1e-8;

/// Expresses the two non-pivot coordinates through the pivot and the level
/// values of two invariants: `x_a = alpha(pivot, k1, k2)`,
/// `x_b = beta(pivot, k1, k2)`, with `a < b` the remaining coordinate slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub pivot: Var,
    pub k1: Expr,
    pub k2: Expr,
    pub alpha: Expr,
    pub beta: Expr,
}

impl Elimination {
    pub fn new(pivot: Var, k1: Expr, k2: Expr, alpha: Expr, beta: Expr) -> Result<Self> {
        if !Chart::X.vars().contains(&pivot) {
            return Err(Error::InvalidArgument(format!("pivot must be one of x1, x2, x3, got `{pivot}`")));
        }
        let allowed: BTreeSet<Var> = [pivot, Var::K1, Var::K2].into();
        for (name, e) in [("alpha", &alpha), ("beta", &beta)] {
            if let Some(v) = e.vars().difference(&allowed).next() {
                return Err(Error::InvalidArgument(format!(
                    "{name} may only use {pivot}, k1 and k2, found `{v}`"
                )));
            }
        }
        for (name, e) in [("K1", &k1), ("K2", &k2)] {
            if e.vars().iter().any(|v| !Chart::X.vars().contains(v)) {
                return Err(Error::InvalidArgument(format!("{name} must be written in x1, x2, x3")));
            }
        }
        Ok(Elimination { pivot, k1, k2, alpha, beta })
    }

    /// Slots of the coordinates given by `alpha` and `beta`.
    pub fn eliminated(&self) -> [usize; 2] {
        match self.pivot.slot() {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    /// Point on the level set `(k1, k2)` with the given pivot value.
    pub fn coords(&self, pivot: f64, k1: f64, k2: f64, env: &Env) -> Result<[f64; 3], EvalError> {
        let mut env = env.clone();
        env.bind(self.pivot, pivot).bind(Var::K1, k1).bind(Var::K2, k2);
        let [a, b] = self.eliminated();
        let mut x = [0.0; 3];
        x[self.pivot.slot()] = pivot;
        x[a] = self.alpha.eval(&env)?;
        x[b] = self.beta.eval(&env)?;
        Ok(x)
    }

    /// Level values `(K1(x), K2(x))`.
    pub fn levels(&self, x: [f64; 3], env: &Env) -> Result<(f64, f64), EvalError> {
        let env = env.with_chart(Chart::X, x);
        Ok((self.k1.eval(&env)?, self.k2.eval(&env)?))
    }
}

/// Checks that `alpha` and `beta` reproduce the eliminated coordinates at
/// sampled points, with `k1`, `k2` bound to the invariants' values there.
pub fn verify_elimination(
    s: &StructureMatrix,
    elim: &Elimination,
    cfg: &SamplingConfig,
) -> Result<VerificationReport> {
    if s.chart != Chart::X {
        return Err(Error::InvalidArgument("elimination needs a structure in x coordinates".into()));
    }
    sample_residual(&s.domain, &s.params, cfg, |env| {
        let x = env.coords(Chart::X).expect("sampler binds the chart");
        let (k1, k2) = elim.levels(x, env)?;
        let rebuilt = elim.coords(x[elim.pivot.slot()], k1, k2, env)?;
        Ok(elim
            .eliminated()
            .iter()
            .map(|&i| (rebuilt[i] - x[i]).abs())
            .fold(0.0, f64::max))
    })
}

/// Integration path for `∫ κ d(pivot)`: from `lower(k1, k2)` to the pivot
/// value of the evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePath {
    /// Lower limit, an expression in `k1`, `k2` and parameters.
    pub lower: Expr,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl QuadraturePath {
    pub fn new(lower: Expr) -> Self {
        QuadraturePath {
            lower,
            rel_tol: 1e-8,
            max_panels: 1 << 20,
        }
    }

    /// Constant lower limit. The path stays on one level set, so the limit
    /// must lie in the range of pivot values that set attains.
    pub fn from_pivot(value: f64) -> Self {
        QuadraturePath::new(Expr::Const(value))
    }
}

/// `κ = λ / (pivot component of the characteristic field)` restricted to a
/// level set, its integral `ln H` and the third invariant `K3 = ξ / H`.
#[derive(Debug, Clone)]
pub struct K3Quadrature {
    elim: Elimination,
    lambda: Expr,
    component: Expr,
    path: QuadraturePath,
    params: ParamValues,
    degenerate: bool,
}

/// Builds the quadrature after confirming the elimination on the domain.
pub fn quadrature_k3(
    s: &StructureMatrix,
    elim: Elimination,
    path: QuadraturePath,
    cfg: &SamplingConfig,
) -> Result<K3Quadrature> {
    let report = verify_elimination(s, &elim, cfg)?;
    if !report.is_zero() {
        return Err(Error::precondition("elimination does not reproduce the coordinates", report));
    }
    if let Some(v) = path.lower.vars().into_iter().find(|v| !matches!(v, Var::K1 | Var::K2)) {
        return Err(Error::InvalidArgument(format!("lower limit may only use k1 and k2, found `{v}`")));
    }
    if !(path.rel_tol > 0.0) || path.max_panels < 8 {
        return Err(Error::InvalidArgument("quadrature tolerance or panel budget out of range".into()));
    }
    let lambda = lambda_of(s);
    let component = characteristic_field(s).components[elim.pivot.slot()].clone();
    let degenerate = lambda.is_const(0.0);
    Ok(K3Quadrature {
        elim,
        lambda,
        component,
        path,
        params: s.params.values.clone(),
        degenerate,
    })
}

impl K3Quadrature {
    pub fn lambda(&self) -> &Expr {
        &self.lambda
    }

    pub fn elimination(&self) -> &Elimination {
        &self.elim
    }

    /// `κ` at the point of level set `(k1, k2)` with the given pivot value.
    pub fn kappa(&self, pivot: f64, k1: f64, k2: f64) -> Result<f64> {
        if self.degenerate {
            return Ok(0.0);
        }
        let env = Env::new(&self.params);
        let x = self.elim.coords(pivot, k1, k2, &env)?;
        let env = env.with_chart(Chart::X, x);
        let denom = self.component.eval(&env)?;
        if denom.abs() < SINGULAR_GUARD {
            return Err(Error::SingularDenominator { pivot, value: denom });
        }
        Ok(self.lambda.eval(&env)? / denom)
    }

    /// `ln H = ∫ κ d(pivot)` from the path's lower limit to `pivot`.
    pub fn log_h(&self, pivot: f64, k1: f64, k2: f64) -> Result<f64> {
        if self.degenerate {
            return Ok(0.0);
        }
        let mut env = Env::new(&self.params);
        env.bind(Var::K1, k1).bind(Var::K2, k2);
        let lower = self.path.lower.eval(&env)?;
        if lower == pivot {
            return Ok(0.0);
        }
        simpson(|p| self.kappa(p, k1, k2), lower, pivot, self.path.rel_tol, self.path.max_panels)
    }

    pub fn h(&self, pivot: f64, k1: f64, k2: f64) -> Result<f64> {
        Ok(self.log_h(pivot, k1, k2)?.exp())
    }

    /// `H` at a point of the original space.
    pub fn h_at(&self, x: [f64; 3]) -> Result<f64> {
        let (k1, k2) = self.elim.levels(x, &Env::new(&self.params))?;
        self.h(x[self.elim.pivot.slot()], k1, k2)
    }

    /// `K3 = ξ / H` at `x`.
    pub fn k3(&self, x: [f64; 3], xi: f64) -> Result<f64> {
        Ok(xi / self.h_at(x)?)
    }

    /// The explicit solution branch `ξ = H · g(K1, K2)` with `g` written
    /// in `k1`, `k2`.
    pub fn xi_branch(&self, x: [f64; 3], g: &Expr) -> Result<f64> {
        let env = Env::new(&self.params);
        let (k1, k2) = self.elim.levels(x, &env)?;
        let mut genv = env.clone();
        genv.bind(Var::K1, k1).bind(Var::K2, k2);
        Ok(self.h(x[self.elim.pivot.slot()], k1, k2)? * g.eval(&genv)?)
    }
}

impl TrajectoryQuantity for K3Quadrature {
    fn label(&self) -> String {
        "K3".into()
    }

    fn value(&self, sample: &TrajectorySample, _params: &ParamValues) -> Result<f64> {
        let xi = sample
            .xi
            .ok_or_else(|| Error::InvalidArgument("K3 needs a trajectory carrying ξ".into()))?;
        self.k3(sample.x, xi)
    }
}

/// Composite Simpson rule, doubling the panel count until two successive
/// estimates agree to `rel_tol · max(1, |S|)`.
fn simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, max_panels: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let estimate = |n: usize| -> Result<f64> {
        let h = (b - a) / n as f64;
        let mut sum = f(a)? + f(b)?;
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + i as f64 * h)?;
        }
        Ok(sum * h / 3.0)
    };
    let mut n = 8;
    let mut prev = estimate(4)?;
    loop {
        let next = estimate(n)?;
        let change = (next - prev).abs();
        if change <= rel_tol * next.abs().max(1.0) {
            return Ok(next);
        }
        if n >= max_panels || !change.is_finite() {
            return Err(Error::QuadratureNonConvergence { panels: n, change });
        }
        prev = next;
        n *= 2;
    }
}
