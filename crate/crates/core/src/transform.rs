//! Coordinate changes `y = φ(x)` and the transformation law for structure
//! matrices, `J'(y) = (∂y/∂x) J(x) (∂y/∂x)^T` at `x = φ⁻¹(y)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, EvalError, Result};
use crate::expr::{Chart, Domain, Env, Expr, ParamValues, Parameters};
use crate::poisson::StructureMatrix;
use crate::verify::{sample_residual, sample_values, SamplingConfig, VerificationReport};

/// Largest accepted round-trip error `|φ⁻¹(φ(x)) − x|`.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

/// Smallest accepted `|det ∂y/∂x|`.
pub const JACOBIAN_FLOOR: f64 = 1e-12;

/// A diffeomorphism given by forward formulas in the source chart and
/// inverse formulas in the target chart, valid on `domain` (source chart).
#[derive(Debug, Clone, PartialEq)]
pub struct Diffeomorphism {
    pub forward: [Expr; 3],
    pub inverse: [Expr; 3],
    pub source: Chart,
    pub target: Chart,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `∂y/∂x` in source coordinates.
    Forward,
    /// `∂x/∂y` in target coordinates.
    Inverse,
}

fn other(chart: Chart) -> Chart {
    match chart {
        Chart::X => Chart::Y,
        Chart::Y => Chart::X,
    }
}

fn check_chart(exprs: &[Expr; 3], chart: Chart, what: &str) -> Result<()> {
    for e in exprs {
        if let Some(v) = e.vars().into_iter().find(|v| !chart.vars().contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "{what} formula `{e}` uses `{v}` outside its chart"
            )));
        }
    }
    Ok(())
}

impl Diffeomorphism {
    pub fn new(forward: [Expr; 3], inverse: [Expr; 3], domain: Domain) -> Result<Self> {
        let source = domain.chart;
        let target = other(source);
        check_chart(&forward, source, "forward")?;
        check_chart(&inverse, target, "inverse")?;
        Ok(Diffeomorphism {
            forward,
            inverse,
            source,
            target,
            domain,
        })
    }

    pub fn parse(forward: [&str; 3], inverse: [&str; 3], domain: Domain) -> Result<Self> {
        let p = |t: &str| t.parse::<Expr>().map_err(Error::from);
        Diffeomorphism::new(
            [p(forward[0])?, p(forward[1])?, p(forward[2])?],
            [p(inverse[0])?, p(inverse[1])?, p(inverse[2])?],
            domain,
        )
    }

    pub fn identity(domain: Domain) -> Self {
        let source = domain.chart;
        let target = other(source);
        Diffeomorphism {
            forward: source.vars().map(Expr::Var),
            inverse: target.vars().map(Expr::Var),
            source,
            target,
            domain,
        }
    }

    /// `y_i = x_i^e_i` on a positive domain.
    pub fn power_map(exponents: [f64; 3], domain: Domain) -> Result<Self> {
        if exponents.iter().any(|e| *e == 0.0 || !e.is_finite()) {
            return Err(Error::InvalidArgument("power map exponents must be finite and nonzero".into()));
        }
        if domain.positive != [true; 3] {
            return Err(Error::InvalidArgument("power maps need a positive domain".into()));
        }
        let source = domain.chart;
        let target = other(source);
        let pw = |v, e: f64| if e == 1.0 { Expr::Var(v) } else { Expr::Var(v).pow(e) };
        let forward = std::array::from_fn(|i| pw(source.var(i), exponents[i]));
        let inverse = std::array::from_fn(|i| pw(target.var(i), 1.0 / exponents[i]));
        Diffeomorphism::new(forward, inverse, domain)
    }

    /// Image of a point given by an environment binding the source chart.
    pub fn apply_env(&self, env: &Env) -> Result<[f64; 3], EvalError> {
        let [a, b, c] = &self.forward;
        Ok([a.eval(env)?, b.eval(env)?, c.eval(env)?])
    }

    pub fn apply(&self, x: [f64; 3], params: &ParamValues) -> Result<[f64; 3], EvalError> {
        self.apply_env(&Env::at(params, self.source, x))
    }

    pub fn apply_inverse(&self, y: [f64; 3], params: &ParamValues) -> Result<[f64; 3], EvalError> {
        let env = Env::at(params, self.target, y);
        let [a, b, c] = &self.inverse;
        Ok([a.eval(&env)?, b.eval(&env)?, c.eval(&env)?])
    }

    /// Samples `|φ⁻¹(φ(x)) − x|_∞` on the domain (tolerance
    /// [`ROUND_TRIP_TOL`]) and the smallest `|det ∂y/∂x|` seen.
    pub fn check(&self, params: &Parameters, cfg: &SamplingConfig) -> Result<DiffeoReport> {
        let cfg = SamplingConfig {
            tol: ROUND_TRIP_TOL,
            ..cfg.clone()
        };
        let round_trip = sample_residual(&self.domain, params, &cfg, |env| {
            let x = env.coords(self.source).expect("sampler binds the chart");
            let back = env.with_chart(self.target, self.apply_env(env)?);
            let [a, b, c] = &self.inverse;
            let back = [a.eval(&back)?, b.eval(&back)?, c.eval(&back)?];
            Ok((0..3).map(|i| (back[i] - x[i]).abs()).fold(0.0, f64::max))
        })?;
        let jac = jacobian(self, Direction::Forward);
        let det = determinant(&jac);
        let dets = sample_values(&self.domain, params, &cfg, |env| Ok(det.eval(env)?.abs()))?;
        let min_abs_det = dets.into_iter().fold(f64::INFINITY, f64::min);
        Ok(DiffeoReport {
            valid: round_trip.is_zero() && min_abs_det > JACOBIAN_FLOOR,
            round_trip,
            min_abs_det,
        })
    }

    /// Axis-aligned bounding box (in the target chart) of the image of
    /// `domain` under the map, from the sampled points and the box corners.
    pub fn image_domain(&self, domain: &Domain, params: &ParamValues) -> Result<Domain> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lower = [f64::INFINITY; 3];
        let mut upper = [f64::NEG_INFINITY; 3];
        let mut widen = |y: [f64; 3]| {
            if y.iter().all(|c| c.is_finite()) {
                for i in 0..3 {
                    lower[i] = lower[i].min(y[i]);
                    upper[i] = upper[i].max(y[i]);
                }
            }
        };
        let corners = (0..8).map(|mask: usize| {
            std::array::from_fn(|i| {
                let (lo, hi) = domain.bounds(i);
                let inset = 1e-9 * (hi - lo);
                if mask >> i & 1 == 1 { hi - inset } else { lo + inset }
            })
        });
        let samples = (0..IMAGE_SAMPLES).map(|_| domain.sample(&mut rng));
        for x in corners.chain(samples) {
            if let Ok(y) = self.apply(x, params) {
                widen(y);
            }
        }
        let positive = std::array::from_fn(|i| lower[i] >= 0.0);
        Domain {
            lower,
            upper,
            positive,
            chart: self.target,
        }
        .validated()
    }

    /// The inverse map, valid on the image of this map's domain.
    pub fn inverted(&self, params: &ParamValues) -> Result<Diffeomorphism> {
        Ok(Diffeomorphism {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            source: self.target,
            target: self.source,
            domain: self.image_domain(&self.domain, params)?,
        })
    }
}

const IMAGE_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoReport {
    pub valid: bool,
    pub round_trip: VerificationReport,
    pub min_abs_det: f64,
}

/// `∂y_i/∂x_j` in source coordinates, or `∂x_i/∂y_j` in target coordinates.
pub fn jacobian(phi: &Diffeomorphism, dir: Direction) -> [[Expr; 3]; 3] {
    let (maps, chart) = match dir {
        Direction::Forward => (&phi.forward, phi.source),
        Direction::Inverse => (&phi.inverse, phi.target),
    };
    std::array::from_fn(|i| std::array::from_fn(|j| maps[i].diff(chart.var(j))))
}

pub fn determinant(m: &[[Expr; 3]; 3]) -> Expr {
    let minor = |a: usize, b: usize| &m[1][a] * &m[2][b] - &m[1][b] * &m[2][a];
    (&m[0][0] * minor(1, 2) - &m[0][1] * minor(0, 2) + &m[0][2] * minor(0, 1)).simplify()
}

/// Rewrites `s` in the target coordinates of `phi`. The result lives on the
/// bounding box of the image of `s.domain`.
pub fn pushforward(s: &StructureMatrix, phi: &Diffeomorphism) -> Result<StructureMatrix> {
    if s.chart != phi.source {
        return Err(Error::InvalidArgument(
            "structure and diffeomorphism source use different charts".into(),
        ));
    }
    let d = jacobian(phi, Direction::Forward);
    let j = s.matrix();
    let entry = |a: usize, b: usize| {
        let mut acc = Expr::zero();
        for k in 0..3 {
            for l in 0..3 {
                if !d[a][k].is_const(0.0) && !j[k][l].is_const(0.0) && !d[b][l].is_const(0.0) {
                    acc = acc + &d[a][k] * &j[k][l] * &d[b][l];
                }
            }
        }
        acc.subst_chart(phi.source, &phi.inverse).simplify()
    };
    let domain = phi.image_domain(&s.domain, &s.params.values)?;
    let mut out = StructureMatrix::new(entry(0, 1), entry(2, 0), entry(1, 2), domain);
    out.params = s.params.clone();
    Ok(out)
}
