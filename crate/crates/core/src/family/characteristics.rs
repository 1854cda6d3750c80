use serde::{Deserialize, Serialize};

use super::{characteristic_field, lambda_of};
use crate::error::{Error, EvalError, Result};
use crate::expr::{Env, ParamValues, Point};
use crate::poisson::StructureMatrix;

/// Largest accepted step-doubling error estimate, relative to `max(1, |y|)`.
pub const LOCAL_ERROR_TOL: f64 = 1e-6;

/// Carried ξ values at or below this magnitude stop the integration.
pub const XI_FLOOR: f64 = 1e-12;

/// Field magnitude under which a starting point is reported as stationary.
pub const DEGENERATE_FIELD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: [f64; 3],
    pub xi: Option<f64>,
}

/// Why an integration stopped before `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Halt {
    /// The next state violated a positivity constraint or a field could not
    /// be evaluated there.
    DomainExit { t: f64, detail: String },
    StepRejected { t: f64, estimate: f64 },
    /// The carried ξ reached [`XI_FLOOR`]; a sign change of ξ would follow.
    XiVanished { t: f64, xi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub step: f64,
    pub order: u32,
    pub params: ParamValues,
    pub halt: Option<Halt>,
    /// The characteristic field vanished (to [`DEGENERATE_FIELD`]) at the
    /// starting point.
    pub stationary: bool,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.halt.is_none()
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("a trajectory holds its starting sample")
    }
}

/// Integrates `dx/dt = (u − v, w − u, v − w)` from `x0` with classical RK4
/// at a fixed step, optionally carrying `dξ/dt = λ(x) ξ`.
///
/// Every step is also taken as two half steps; the half-step result is kept
/// and the difference serves as error estimate. Failures during the flight
/// (leaving the admissible set, a rejected step, ξ vanishing) truncate the
/// trajectory and record a [`Halt`] instead of returning an error.
pub fn integrate_characteristics(
    s: &StructureMatrix,
    x0: &Point,
    t_end: f64,
    step: f64,
    xi0: Option<f64>,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {t_end}")));
    }
    if !s.domain.admits(x0.x) {
        return Err(Error::InvalidArgument(format!(
            "starting point {:?} is outside the domain",
            x0.x
        )));
    }
    if let Some(xi) = xi0 {
        if !(xi.abs() > XI_FLOOR && xi.is_finite()) {
            return Err(Error::InvalidArgument(format!("initial ξ must be nonzero, got {xi}")));
        }
    }

    let mut params = s.params.values.clone();
    params.extend(x0.params.iter().map(|(k, v)| (k.clone(), *v)));
    let field = characteristic_field(s);
    let lambda = xi0.map(|_| lambda_of(s));
    let chart = s.chart;

    let rhs = |y: &[f64; 4]| -> Result<[f64; 4], EvalError> {
        let env = Env::at(&params, chart, [y[0], y[1], y[2]]);
        let [a, b, c] = field.eval(&env)?;
        let d = match &lambda {
            Some(l) => l.eval(&env)? * y[3],
            None => 0.0,
        };
        Ok([a, b, c, d])
    };

    let start = rhs(&[x0.x[0], x0.x[1], x0.x[2], xi0.unwrap_or(0.0)])?;
    let stationary = start[..3].iter().all(|c| c.abs() < DEGENERATE_FIELD);

    let mut samples = vec![TrajectorySample {
        t: 0.0,
        x: x0.x,
        xi: xi0,
    }];
    let mut y = [x0.x[0], x0.x[1], x0.x[2], xi0.unwrap_or(0.0)];
    let mut halt = None;
    let n = (t_end / step - 1e-9).ceil().max(0.0) as usize;
    for k in 0..n {
        let t = k as f64 * step;
        let t_next = if k + 1 == n { t_end } else { (k + 1) as f64 * step };
        let h = t_next - t;
        let advanced = rk4(&rhs, &y, h).and_then(|full| {
            let mid = rk4(&rhs, &y, h / 2.0)?;
            let half = rk4(&rhs, &mid, h / 2.0)?;
            Ok((full, half))
        });
        let (full, half) = match advanced {
            Ok(pair) => pair,
            Err(e) => {
                halt = Some(Halt::DomainExit { t, detail: e.to_string() });
                break;
            }
        };
        let estimate = full
            .iter()
            .zip(&half)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        if !estimate.is_finite() || estimate > LOCAL_ERROR_TOL {
            halt = Some(Halt::StepRejected { t, estimate });
            break;
        }
        let x = [half[0], half[1], half[2]];
        if !s.domain.admits(x) {
            halt = Some(Halt::DomainExit {
                t: t_next,
                detail: format!("state {x:?} violates the domain constraints"),
            });
            break;
        }
        if xi0.is_some() && half[3].abs() <= XI_FLOOR {
            halt = Some(Halt::XiVanished { t: t_next, xi: half[3] });
            break;
        }
        y = half;
        samples.push(TrajectorySample {
            t: t_next,
            x,
            xi: xi0.map(|_| y[3]),
        });
    }

    Ok(Trajectory {
        samples,
        step,
        order: 4,
        params,
        halt,
        stationary,
    })
}

fn rk4<F>(f: &F, y: &[f64; 4], h: f64) -> Result<[f64; 4], EvalError>
where
    F: Fn(&[f64; 4]) -> Result<[f64; 4], EvalError>,
{
    let shift = |a: &[f64; 4], k: &[f64; 4], c: f64| std::array::from_fn(|i| a[i] + c * k[i]);
    let k1 = f(y)?;
    let k2 = f(&shift(y, &k1, h / 2.0))?;
    let k3 = f(&shift(y, &k2, h / 2.0))?;
    let k4 = f(&shift(y, &k3, h))?;
    let out: [f64; 4] = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(EvalError::Domain("non-finite state".into()))
    }
}
