//! Construction of new solution families from one known structure matrix.
//!
//! Substituting `{u0 + ξ, v0 + ξ, w0 + ξ}` into the Jacobi equation cancels
//! every nonlinear term and leaves the linear first-order PDE
//!
//! ```text
//! (u0 − v0) ∂1ξ + (w0 − u0) ∂2ξ + (v0 − w0) ∂3ξ = λ ξ,
//! λ = ∂1(u0 − v0) + ∂2(w0 − u0) + ∂3(v0 − w0).
//! ```
//!
//! When λ vanishes, `x1 + x2 + x3` and any Casimir are first integrals of
//! the characteristics and every `ξ = Ψ(K1, K2)` solves the PDE
//! ([`case1_family`]). Otherwise a third integral comes from a quadrature
//! along one pivot coordinate ([`quadrature_k3`]), or the structure is
//! first mapped to coordinates where λ vanishes ([`case3_family`]).

mod characteristics;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::poisson::{is_casimir, StructureMatrix, VectorField};
use crate::transform::{jacobian, pushforward, Diffeomorphism, Direction};
use crate::verify::{sample_residual, sample_expr, SamplingConfig, VerificationReport};

pub use characteristics::{
    integrate_characteristics, Halt, Trajectory, TrajectorySample, DEGENERATE_FIELD,
    LOCAL_ERROR_TOL, XI_FLOOR,
};
pub use quadrature::{
    quadrature_k3, verify_elimination, Elimination, K3Quadrature, QuadraturePath, SINGULAR_GUARD,
};

/// Tolerance for matching a pushforward against the requested target.
pub const TARGET_MATCH_TOL: f64 = 1e-8;

/// `λ = ∂1(u − v) + ∂2(w − u) + ∂3(v − w)`.
pub fn lambda_of(s: &StructureMatrix) -> Expr {
    let [d1, d2, d3] = s.coords();
    let (u, v, w) = (&s.u, &s.v, &s.w);
    ((u - v).diff(d1) + (w - u).diff(d2) + (v - w).diff(d3)).simplify()
}

/// The characteristic vector field `(u − v, w − u, v − w)`.
pub fn characteristic_field(s: &StructureMatrix) -> VectorField {
    let (u, v, w) = (&s.u, &s.v, &s.w);
    VectorField {
        components: [(u - v).simplify(), (w - u).simplify(), (v - w).simplify()],
        chart: s.chart,
    }
}

/// Residual of the linear PDE for a candidate perturbation `xi`.
pub fn pde_residual(s: &StructureMatrix, xi: &Expr) -> Expr {
    let field = characteristic_field(s);
    let grad = xi.gradient(s.coords());
    let [a, b, c] = &field.components;
    a * &grad[0] + b * &grad[1] + c * &grad[2] - lambda_of(s) * xi
}

pub fn check_pde(s: &StructureMatrix, xi: &Expr, cfg: &SamplingConfig) -> Result<VerificationReport> {
    sample_expr(&pde_residual(s, xi), &s.domain, &s.params, cfg)
}

/// `{u + ξ, v + ξ, w + ξ}`.
pub fn ansatz(s: &StructureMatrix, xi: &Expr) -> StructureMatrix {
    s.plus([xi, xi, xi])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseClass {
    /// λ vanishes on the domain.
    CaseI,
    /// λ does not vanish; telling Case II from Case III needs an
    /// elimination of two coordinates (see [`verify_elimination`]).
    CaseIIOrIII,
}

pub fn classify_case(s: &StructureMatrix, cfg: &SamplingConfig) -> Result<(CaseClass, VerificationReport)> {
    let report = sample_expr(&lambda_of(s), &s.domain, &s.params, cfg)?;
    let class = if report.is_zero() {
        CaseClass::CaseI
    } else {
        CaseClass::CaseIIOrIII
    };
    Ok((class, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    CaseI,
    CaseIII,
}

/// `base + Ψ(K1, K2) · (M12, M31, M23)`, with the generator `Ψ` written in
/// the reserved symbols `k1`, `k2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFamily {
    pub base: StructureMatrix,
    pub k1: Expr,
    pub k2: Expr,
    pub psi: Expr,
    pub multipliers: [Expr; 3],
    pub kind: FamilyKind,
}

impl SolutionFamily {
    pub fn with_psi(mut self, psi: Expr) -> Result<Self> {
        check_generator(&psi)?;
        self.psi = psi;
        Ok(self)
    }

    /// Substitutes `k1 ← K1(x)`, `k2 ← K2(x)` into `psi`.
    pub fn perturbation(&self, psi: &Expr) -> Result<Expr> {
        check_generator(psi)?;
        Ok(psi.subst(&[(Var::K1, &self.k1), (Var::K2, &self.k2)]))
    }

    pub fn materialize(&self) -> Result<StructureMatrix> {
        self.materialize_with(&self.psi)
    }

    pub fn materialize_with(&self, psi: &Expr) -> Result<StructureMatrix> {
        let xi = self.perturbation(psi)?;
        if xi.simplify().is_const(0.0) {
            return Ok(self.base.clone());
        }
        let [m12, m31, m23] = &self.multipliers;
        let term = |m: &Expr| if m.is_const(1.0) { xi.clone() } else { &xi * m };
        Ok(self.base.plus([&term(m12), &term(m31), &term(m23)]))
    }
}

fn check_generator(psi: &Expr) -> Result<()> {
    match psi.vars().into_iter().find(|v| !matches!(v, Var::K1 | Var::K2)) {
        Some(v) => Err(Error::InvalidArgument(format!(
            "generator may only use k1 and k2, found `{v}`"
        ))),
        None => Ok(()),
    }
}

/// `x1 + x2 + x3` in the coordinates of `s`.
pub fn coordinate_sum(s: &StructureMatrix) -> Expr {
    let [a, b, c] = s.coords().map(Expr::Var);
    a + b + c
}

/// Case I family `{u0 + Ψ, v0 + Ψ, w0 + Ψ}` with `Ψ = Ψ(x1 + x2 + x3, C)`.
pub fn case1_family(
    s: &StructureMatrix,
    casimir: &Expr,
    psi: &Expr,
    cfg: &SamplingConfig,
) -> Result<SolutionFamily> {
    check_generator(psi)?;
    let (class, report) = classify_case(s, cfg)?;
    if class != CaseClass::CaseI {
        return Err(Error::precondition("λ does not vanish on the domain", report));
    }
    let report = is_casimir(casimir, s, cfg)?;
    if !report.is_zero() {
        return Err(Error::precondition(
            format!("`{casimir}` is not a Casimir of the base structure"),
            report,
        ));
    }
    Ok(SolutionFamily {
        base: s.clone(),
        k1: coordinate_sum(s),
        k2: casimir.clone(),
        psi: psi.clone(),
        multipliers: [Expr::one(), Expr::one(), Expr::one()],
        kind: FamilyKind::CaseI,
    })
}

/// Constant skew matrix with entries `A12 = A31 = A23 = 1`.
pub const UNIT_SKEW: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];

/// Case III family: solve the Case I problem for `target` (the base written
/// in the coordinates `y = φ(x)`) and transform the result back, giving
/// `base + Ψ(y1 + y2 + y3, C'(y)) · (M12, M31, M23)` with
/// `M_ij = Σ (∂x_i/∂y_k) A_kl (∂x_j/∂y_l)` expressed in `x`.
pub fn case3_family(
    s: &StructureMatrix,
    phi: &Diffeomorphism,
    target: &StructureMatrix,
    casimir_y: &Expr,
    psi: &Expr,
    cfg: &SamplingConfig,
) -> Result<SolutionFamily> {
    check_generator(psi)?;
    if s.chart != phi.source || target.chart != phi.target {
        return Err(Error::InvalidArgument(
            "base, diffeomorphism and target charts do not line up".into(),
        ));
    }

    let pushed = pushforward(s, phi)?;
    let mismatch: Vec<Expr> = pushed
        .entries()
        .into_iter()
        .zip(target.entries())
        .map(|(p, t)| p - t)
        .collect();
    let match_cfg = SamplingConfig {
        tol: TARGET_MATCH_TOL,
        ..cfg.clone()
    };
    let report = sample_through(phi, s, &match_cfg, &mismatch)?;
    if !report.is_zero() {
        return Err(Error::precondition(
            "pushforward of the base does not match the target",
            report,
        ));
    }

    let report = sample_through(phi, s, cfg, &[lambda_of(target)])?;
    if !report.is_zero() {
        return Err(Error::precondition("λ of the target does not vanish", report));
    }

    let brackets: Vec<Expr> = target
        .coords()
        .into_iter()
        .map(|y| crate::poisson::bracket(casimir_y, &Expr::Var(y), target))
        .collect();
    let report = sample_through(phi, s, cfg, &brackets)?;
    if !report.is_zero() {
        return Err(Error::precondition(
            format!("`{casimir_y}` is not a Casimir of the target"),
            report,
        ));
    }

    let to_x = |e: &Expr| e.subst_chart(phi.target, &phi.forward).simplify();
    let j = jacobian(phi, Direction::Inverse);
    let m = |i: usize, k: usize| {
        let mut acc = Expr::zero();
        for a in 0..3 {
            for b in 0..3 {
                if UNIT_SKEW[a][b] != 0.0 {
                    acc = acc + &j[i][a] * Expr::Const(UNIT_SKEW[a][b]) * &j[k][b];
                }
            }
        }
        to_x(&acc.simplify())
    };
    let [f1, f2, f3] = &phi.forward;
    Ok(SolutionFamily {
        base: s.clone(),
        k1: (f1 + f2 + f3).simplify(),
        k2: to_x(casimir_y),
        psi: psi.clone(),
        multipliers: [m(0, 1), m(2, 0), m(1, 2)],
        kind: FamilyKind::CaseIII,
    })
}

/// Samples expressions written in `phi`'s target chart at the images of
/// points drawn from `s`'s domain.
fn sample_through(
    phi: &Diffeomorphism,
    s: &StructureMatrix,
    cfg: &SamplingConfig,
    exprs: &[Expr],
) -> Result<VerificationReport> {
    sample_residual(&s.domain, &s.params, cfg, |env| {
        let image = phi.apply_env(env)?;
        let mapped = env.with_chart(phi.target, image);
        exprs
            .iter()
            .try_fold(0.0_f64, |acc, e| Ok(acc.max(e.eval(&mapped)?.abs())))
    })
}

/// Exponents of the power map `y = (x1^α, x2^β, x3^γ)` that takes the
/// structure `{a12 x1 x2, a31 x1 x3, a23 x2 x3}` to `s·{y1 y2, y1 y3, y2 y3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvExponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sign: f64,
}

/// Solves `a12 αβ = a31 αγ = a23 βγ = s` with `s = sign(a12 a31 a23)`,
/// taking the positive branch `αβγ = 1/sqrt|a12 a31 a23|`.
pub fn lv_exponents(a12: f64, a31: f64, a23: f64) -> Result<LvExponents> {
    if [a12, a31, a23].iter().any(|a| *a == 0.0 || !a.is_finite()) {
        return Err(Error::InvalidArgument(
            "all three coefficients must be finite and nonzero".into(),
        ));
    }
    let product = a12 * a31 * a23;
    let sign = product.signum();
    let abc = 1.0 / product.abs().sqrt();
    Ok(LvExponents {
        alpha: abc * a23 * sign,
        beta: abc * a31 * sign,
        gamma: abc * a12 * sign,
        sign,
    })
}
