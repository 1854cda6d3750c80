//! Sampling policies, residual aggregation and verification reports shared
//! by every identity check.
//!
//! Sample `i` is drawn from its own ChaCha stream (`seed`, stream `i`), so
//! reports do not depend on evaluation order and the first `n` samples of a
//! larger run are exactly the samples of a run with `n` points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::expr::{Domain, Env, Expr, ParamValues, Parameters};
use crate::family::{SolutionFamily, Trajectory, TrajectorySample};
use crate::poisson::{jacobi_residual, StructureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub points: usize,
    pub seed: u64,
    /// Absolute residual tolerance.
    pub tol: f64,
    /// Points where any intermediate value exceeds this magnitude are
    /// resampled.
    pub guard: f64,
    /// Resampling attempts allowed per sample index.
    pub retries_per_point: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            points: 1000,
            seed: 42,
            tol: 1e-9,
            guard: 1e6,
            retries_per_point: 100,
        }
    }
}

impl SamplingConfig {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.guard > 0.0) {
            return Err(Error::InvalidArgument("magnitude guard must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Zero,
    NonZero,
}

/// A sample point at which a residual exceeded the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: [f64; 3],
    pub params: ParamValues,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub witness: Option<Witness>,
    pub skipped: usize,
}

impl VerificationReport {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Outcome {
    point: [f64; 3],
    params: ParamValues,
    value: f64,
    skipped: usize,
}

impl Outcome {
    fn residual(&self) -> f64 {
        self.value.abs()
    }
}

fn draw(
    index: usize,
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
    f: &(dyn Fn(&Env) -> Result<f64, EvalError> + Sync),
) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    for attempt in 0..=cfg.retries_per_point {
        let point = domain.sample(&mut rng);
        let values = params.sample(&mut rng);
        let env = Env::at(&values, domain.chart, point).with_guard(cfg.guard);
        match f(&env) {
            Ok(r) => {
                return Ok(Outcome {
                    point,
                    params: values,
                    value: r,
                    skipped: attempt,
                })
            }
            Err(EvalError::Domain(_)) | Err(EvalError::Guard(_)) => continue,
            Err(e @ EvalError::Unbound(_)) => return Err(e.into()),
        }
    }
    Err(Error::RetriesExhausted {
        index,
        retries: cfg.retries_per_point,
    })
}

/// Raw values of `f` at the `cfg.points` seeded sample points, in index
/// order.
pub fn sample_values<F>(
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&Env) -> Result<f64, EvalError> + Sync,
{
    Ok(sample_outcomes(domain, params, cfg, &f)?
        .into_iter()
        .map(|o| o.value)
        .collect())
}

fn sample_outcomes(
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
    f: &(dyn Fn(&Env) -> Result<f64, EvalError> + Sync),
) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    (0..cfg.points)
        .into_par_iter()
        .map(|i| draw(i, domain, params, cfg, f))
        .collect()
}

/// Evaluates a residual at `cfg.points` seeded points of `domain` and
/// aggregates the absolute values into a report.
pub fn sample_residual<F>(
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
    f: F,
) -> Result<VerificationReport>
where
    F: Fn(&Env) -> Result<f64, EvalError> + Sync,
{
    let outcomes = sample_outcomes(domain, params, cfg, &f)?;

    let mut max = 0.0_f64;
    let mut sum = 0.0;
    let mut skipped = 0;
    let mut worst: Option<&Outcome> = None;
    for o in &outcomes {
        sum += o.residual();
        skipped += o.skipped;
        if worst.is_none() || o.residual() > max {
            max = o.residual();
            worst = Some(o);
        }
    }
    let witness = worst.filter(|o| o.residual() > cfg.tol).map(|o| Witness {
        point: o.point,
        params: o.params.clone(),
        residual: o.residual(),
    });
    Ok(VerificationReport {
        verdict: if witness.is_some() {
            Verdict::NonZero
        } else {
            Verdict::Zero
        },
        max_abs_residual: max,
        mean_abs_residual: sum / outcomes.len() as f64,
        n_samples: outcomes.len(),
        seed: cfg.seed,
        witness,
        skipped,
    })
}

/// Largest absolute value among several residual expressions.
pub fn sample_exprs(
    exprs: &[Expr],
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
) -> Result<VerificationReport> {
    sample_residual(domain, params, cfg, |env| {
        exprs
            .iter()
            .try_fold(0.0_f64, |acc, e| Ok(acc.max(e.eval(env)?.abs())))
    })
}

pub(crate) fn sample_expr(
    e: &Expr,
    domain: &Domain,
    params: &Parameters,
    cfg: &SamplingConfig,
) -> Result<VerificationReport> {
    sample_residual(domain, params, cfg, |env| e.eval(env))
}

/// Samples the Jacobi residual of `s` on its own domain.
pub fn check_jacobi(s: &StructureMatrix, cfg: &SamplingConfig) -> Result<VerificationReport> {
    sample_expr(&jacobi_residual(s), &s.domain, &s.params, cfg)
}

/// Runs [`check_jacobi`] and, on a Zero verdict, returns the structure
/// flagged as verified.
pub fn certify(s: StructureMatrix, cfg: &SamplingConfig) -> Result<StructureMatrix> {
    let report = check_jacobi(&s, cfg)?;
    if report.is_zero() {
        Ok(s.into_verified())
    } else {
        Err(Error::precondition("structure fails the Jacobi identity", report))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub psi: String,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub verdict: Verdict,
    pub members: Vec<MemberReport>,
}

impl FamilyReport {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }
}

/// Materializes `family` for every generator in `psis` and checks each
/// member; the overall verdict is the conjunction.
pub fn check_family(
    family: &SolutionFamily,
    psis: &[Expr],
    cfg: &SamplingConfig,
) -> Result<FamilyReport> {
    let members = psis
        .par_iter()
        .map(|psi| {
            let member = family.materialize_with(psi)?;
            Ok(MemberReport {
                psi: psi.to_string(),
                report: check_jacobi(&member, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_zero = members.iter().all(|m| m.report.is_zero());
    Ok(FamilyReport {
        verdict: if all_zero {
            Verdict::Zero
        } else {
            Verdict::NonZero
        },
        members,
    })
}

/// A quantity that can be evaluated along a trajectory.
pub trait TrajectoryQuantity: Sync {
    fn label(&self) -> String;
    fn value(&self, sample: &TrajectorySample, params: &ParamValues) -> Result<f64>;
}

impl TrajectoryQuantity for Expr {
    fn label(&self) -> String {
        self.to_string()
    }

    fn value(&self, sample: &TrajectorySample, params: &ParamValues) -> Result<f64> {
        Ok(self.eval(&Env::at(params, crate::expr::Chart::X, sample.x))?)
    }
}

/// Values below this magnitude at t = 0 are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub quantity: String,
    pub initial: f64,
    pub max_drift: f64,
    pub relative: bool,
}

/// Drift of `value` against `initial`: relative unless `initial` is tiny.
pub fn drift(initial: f64, value: f64) -> f64 {
    if initial.abs() < RELATIVE_FLOOR {
        (value - initial).abs()
    } else {
        ((value - initial) / initial).abs()
    }
}

/// Maximum drift of every quantity along the trajectory, measured against
/// its value at the first sample.
pub fn conservation_report(
    trajectory: &Trajectory,
    quantities: &[&dyn TrajectoryQuantity],
) -> Result<Vec<Drift>> {
    let first = trajectory
        .samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    quantities
        .iter()
        .map(|q| {
            let initial = q.value(first, &trajectory.params)?;
            let mut max_drift = 0.0_f64;
            for s in &trajectory.samples {
                max_drift = max_drift.max(drift(initial, q.value(s, &trajectory.params)?));
            }
            Ok(Drift {
                quantity: q.label(),
                initial,
                max_drift,
                relative: initial.abs() >= RELATIVE_FLOOR,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn so3() -> StructureMatrix {
        StructureMatrix::parse("x3", "x2", "x1", Domain::cube(-2.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn so3_residual_is_exactly_zero() {
        let r = check_jacobi(&so3(), &SamplingConfig::default()).unwrap();
        assert!(r.is_zero());
        assert!(r.max_abs_residual < 1e-12);
        assert_eq!(r.n_samples, 1000);
        assert_eq!(r.seed, 42);
    }

    #[test]
    fn broken_structure_reports_witness() {
        let s = StructureMatrix::parse("x3", "x1", "0", Domain::cube(-2.0, 2.0).unwrap()).unwrap();
        let r = check_jacobi(&s, &SamplingConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NonZero);
        let w = r.witness.unwrap();
        assert!((w.residual - w.point[2].abs()).abs() < 1e-12);
        assert!(w.residual > 1e-9);
    }

    #[test]
    fn reports_are_deterministic_and_serialize() {
        let s = StructureMatrix::parse("x3", "x1", "0", Domain::cube(-2.0, 2.0).unwrap()).unwrap();
        let cfg = SamplingConfig::default().with_points(200);
        let a = check_jacobi(&s, &cfg).unwrap();
        let b = check_jacobi(&s, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        for key in [
            "verdict",
            "max_abs_residual",
            "mean_abs_residual",
            "n_samples",
            "seed",
            "witness",
            "skipped",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "NonZero");
    }

    #[test]
    fn exhausted_retries_are_an_error() {
        let e = parse("ln(x1 - 10)").unwrap();
        let r = sample_expr(
            &e,
            &Domain::unit_box(),
            &Parameters::default(),
            &SamplingConfig::default().with_points(3),
        );
        assert!(matches!(r, Err(Error::RetriesExhausted { index: 0, .. })));
    }

    #[test]
    fn domain_errors_are_resampled() {
        let e = parse("ln(x1 - 0.5) - ln(x1 - 0.5)").unwrap();
        let r = sample_expr(
            &e,
            &Domain::unit_box(),
            &Parameters::default(),
            &SamplingConfig::default(),
        )
        .unwrap();
        assert!(r.is_zero());
        assert!(r.skipped > 0);
    }

    #[test]
    fn ranged_parameters_are_sampled() {
        let params = Parameters::from_values([("a", 1.0)])
            .with_range("a", 2.0, 3.0)
            .unwrap();
        let e = parse("a").unwrap();
        let r = sample_expr(&e, &Domain::unit_box(), &params, &SamplingConfig::default()).unwrap();
        assert!(r.max_abs_residual > 2.0 && r.max_abs_residual < 3.0);
        assert!(r.mean_abs_residual > 2.4 && r.mean_abs_residual < 2.6);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let e = parse("x1").unwrap();
        let d = Domain::unit_box();
        let p = Parameters::default();
        assert!(sample_expr(&e, &d, &p, &SamplingConfig::default().with_points(0)).is_err());
        assert!(sample_expr(&e, &d, &p, &SamplingConfig::default().with_tol(0.0)).is_err());
    }

    #[test]
    fn unbound_parameter_is_a_hard_error() {
        let e = parse("q*x1").unwrap();
        let r = sample_expr(&e, &Domain::unit_box(), &Parameters::default(), &SamplingConfig::default());
        assert!(matches!(r, Err(Error::Eval(EvalError::Unbound(_)))));
    }

    #[test]
    fn drift_switches_to_absolute_near_zero() {
        assert_eq!(drift(2.0, 2.2), 0.10000000000000009);
        assert_eq!(drift(0.0, 1e-9), 1e-9);
    }
}
