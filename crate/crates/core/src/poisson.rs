//! Three-dimensional structure matrices and the operations defined on them.
//!
//! A structure matrix is stored through its three independent entries
//! `u = J12`, `v = J31`, `w = J23`; the full skew-symmetric matrix is
//! assembled on demand, so skew-symmetry never needs checking.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::expr::{parse, Chart, Domain, Env, Expr, Parameters, Point, Var};
use crate::verify::{sample_exprs, sample_values, SamplingConfig, VerificationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    pub u: Expr,
    pub v: Expr,
    pub w: Expr,
    pub chart: Chart,
    pub domain: Domain,
    pub params: Parameters,
    verified: bool,
}

impl StructureMatrix {
    /// Builds a structure written in the chart of `domain`.
    pub fn new(u: Expr, v: Expr, w: Expr, domain: Domain) -> Self {
        StructureMatrix {
            u,
            v,
            w,
            chart: domain.chart,
            domain,
            params: Parameters::default(),
            verified: false,
        }
    }

    pub fn parse(u: &str, v: &str, w: &str, domain: Domain) -> Result<Self> {
        Ok(Self::new(parse(u)?, parse(v)?, parse(w)?, domain))
    }

    pub fn with_params(mut self, params: Parameters) -> Self {
        self.params = params;
        self.verified = false;
        self
    }

    pub fn entries(&self) -> [&Expr; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// Entry `J_ij` (zero-based indices).
    pub fn entry(&self, i: usize, j: usize) -> Expr {
        match (i, j) {
            (0, 1) => self.u.clone(),
            (1, 0) => (-&self.u).simplify(),
            (2, 0) => self.v.clone(),
            (0, 2) => (-&self.v).simplify(),
            (1, 2) => self.w.clone(),
            (2, 1) => (-&self.w).simplify(),
            (i, j) if i == j && i < 3 => Expr::zero(),
            _ => panic!("structure matrix index ({i}, {j}) out of range"),
        }
    }

    pub fn matrix(&self) -> [[Expr; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.entry(i, j)))
    }

    pub fn eval_entries(&self, env: &Env) -> Result<[f64; 3], EvalError> {
        Ok([self.u.eval(env)?, self.v.eval(env)?, self.w.eval(env)?])
    }

    /// Entry values at a point given in this structure's chart.
    pub fn entries_at(&self, coords: [f64; 3]) -> Result<[f64; 3], EvalError> {
        self.eval_entries(&Env::at(&self.params.values, self.chart, coords))
    }

    /// Coordinate variables of this structure's chart.
    pub fn coords(&self) -> [Var; 3] {
        self.chart.vars()
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    pub(crate) fn into_verified(mut self) -> Self {
        self.verified = true;
        self
    }

    /// Applies `f` to each entry; the result is unverified.
    pub fn map_entries(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        StructureMatrix {
            u: f(&self.u),
            v: f(&self.v),
            w: f(&self.w),
            verified: false,
            ..self.clone()
        }
    }

    /// `{u + a, v + b, w + c}` on the same domain.
    pub fn plus(&self, add: [&Expr; 3]) -> Self {
        StructureMatrix {
            u: (&self.u + add[0]).simplify(),
            v: (&self.v + add[1]).simplify(),
            w: (&self.w + add[2]).simplify(),
            verified: false,
            ..self.clone()
        }
    }
}

/// Symbolic Jacobi residual
/// `u ∂1v − v ∂1u + w ∂2u − u ∂2w + v ∂3w − w ∂3v`.
///
/// The combination is left unsimplified; whether it vanishes is decided by
/// sampling.
pub fn jacobi_residual(s: &StructureMatrix) -> Expr {
    let [d1, d2, d3] = s.coords();
    let (u, v, w) = (&s.u, &s.v, &s.w);
    &(&(&(&(u * v.diff(d1)) - &(v * u.diff(d1))) + &(w * u.diff(d2))) - &(u * w.diff(d2)))
        + &(v * w.diff(d3))
        - (w * v.diff(d3))
}

/// `{f, g} = Σ ∂i f J_ij ∂j g`.
pub fn bracket(f: &Expr, g: &Expr, s: &StructureMatrix) -> Expr {
    let vars = s.coords();
    let df = f.gradient(vars);
    let dg = g.gradient(vars);
    let mut acc = Expr::zero();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                acc = acc + &df[i] * s.entry(i, j) * &dg[j];
            }
        }
    }
    acc.simplify()
}

/// Checks that `{C, x_i}` vanishes for all three coordinates.
pub fn is_casimir(
    c: &Expr,
    s: &StructureMatrix,
    cfg: &SamplingConfig,
) -> Result<VerificationReport> {
    let brackets: Vec<Expr> = s
        .coords()
        .into_iter()
        .map(|x| bracket(c, &Expr::Var(x), s))
        .collect();
    sample_exprs(&brackets, &s.domain, &s.params, cfg)
}

/// A vector field with symbolic components in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: [Expr; 3],
    pub chart: Chart,
}

impl VectorField {
    pub fn eval(&self, env: &Env) -> Result<[f64; 3], EvalError> {
        Ok([
            self.components[0].eval(env)?,
            self.components[1].eval(env)?,
            self.components[2].eval(env)?,
        ])
    }

    /// Derivative of `f` along the field, `Σ X_i ∂i f`.
    pub fn directional(&self, f: &Expr) -> Expr {
        let grad = f.gradient(self.chart.vars());
        let sum = (0..3).fold(Expr::zero(), |acc, i| acc + &self.components[i] * &grad[i]);
        sum.simplify()
    }
}

/// Component `i` is `Σ_j J_ij ∂j H`.
pub fn hamiltonian_vector_field(s: &StructureMatrix, h: &Expr) -> VectorField {
    let grad = h.gradient(s.coords());
    let components = std::array::from_fn(|i| {
        (0..3)
            .fold(Expr::zero(), |acc, j| acc + s.entry(i, j) * &grad[j])
            .simplify()
    });
    VectorField {
        components,
        chart: s.chart,
    }
}

/// Rank of a 3×3 skew-symmetric matrix: zero or two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Zero = 0,
    Two = 2,
}

pub const RANK_TOL: f64 = 1e-12;

pub fn rank_at(s: &StructureMatrix, p: &Point, tol: f64) -> Result<Rank> {
    let mut params = s.params.values.clone();
    params.extend(p.params.iter().map(|(k, v)| (k.clone(), *v)));
    let entries = s.eval_entries(&Env::at(&params, s.chart, p.x))?;
    let largest = entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    Ok(if largest > tol { Rank::Two } else { Rank::Zero })
}

/// Rank statistics over the sampled domain. Rank drops are reported, not
/// treated as failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSurvey {
    pub samples: usize,
    pub degenerate: usize,
    pub smallest_entry_norm: f64,
}

pub fn rank_survey(s: &StructureMatrix, cfg: &SamplingConfig) -> Result<RankSurvey> {
    let norms = sample_values(&s.domain, &s.params, cfg, |env| {
        let e = s.eval_entries(env)?;
        Ok(e.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    })?;
    Ok(RankSurvey {
        samples: norms.len(),
        degenerate: norms.iter().filter(|n| **n <= RANK_TOL).count(),
        smallest_entry_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::check_jacobi;

    fn cube() -> Domain {
        Domain::cube(-2.0, 2.0).unwrap()
    }

    fn so3() -> StructureMatrix {
        StructureMatrix::parse("x3", "x2", "x1", cube()).unwrap()
    }

    fn at(e: &Expr, x: [f64; 3]) -> f64 {
        e.eval_at(&Point::new(x)).unwrap()
    }

    #[test]
    fn residual_examples() {
        let cfg = SamplingConfig::default();
        assert!(check_jacobi(&so3(), &cfg).unwrap().is_zero());
        let constant = StructureMatrix::parse("1", "2", "3", cube()).unwrap();
        assert!(check_jacobi(&constant, &cfg).unwrap().is_zero());

        let broken = StructureMatrix::parse("x3", "x1", "0", cube()).unwrap();
        let r = jacobi_residual(&broken);
        for x in [[0.3, -1.0, 0.7], [1.0, 2.0, -3.0]] {
            assert!((at(&r, x) - x[2]).abs() < 1e-15);
        }
    }

    #[test]
    fn bracket_examples() {
        let s = so3();
        let x1 = parse("x1").unwrap();
        let x2 = parse("x2").unwrap();
        assert_eq!(bracket(&x1, &x2, &s), parse("x3").unwrap());

        let f = parse("x1^2*x2 + exp(x3)").unwrap();
        assert_eq!(bracket(&f, &f, &s), Expr::zero());

        let c = parse("x1^2 + x2^2 + x3^2").unwrap();
        let b = bracket(&c, &x1, &s);
        for x in [[0.3, -1.0, 0.7], [1.0, 2.0, -3.0]] {
            assert!(at(&b, x).abs() < 1e-14);
        }
    }

    #[test]
    fn casimir_examples() {
        let cfg = SamplingConfig::default();
        let ray = StructureMatrix::parse("4*x3", "-2*x1", "-2*x2", cube()).unwrap();
        assert!(is_casimir(&parse("x1*x2 - x3^2").unwrap(), &ray, &cfg)
            .unwrap()
            .is_zero());

        let sir = StructureMatrix::parse("-r*x1*x2", "0", "-a*x2", Domain::positive_orthant(0.1, 5.0).unwrap())
            .unwrap()
            .with_params(Parameters::from_values([("r", 1.0), ("a", 1.0)]));
        let c = parse("x3 + (a/r)*ln(x1)").unwrap();
        assert!(is_casimir(&c, &sir, &cfg).unwrap().is_zero());

        let r = is_casimir(&parse("x1").unwrap(), &so3(), &cfg).unwrap();
        let w = r.witness.expect("x1 is not a Casimir of so(3)");
        assert!(w.point[2].abs() > 1e-9 || w.point[1].abs() > 1e-9);
    }

    #[test]
    fn hamiltonian_field_examples() {
        let f = hamiltonian_vector_field(&so3(), &parse("x3").unwrap());
        assert_eq!(f.components[0].to_string(), "-x2");
        assert_eq!(f.components[1].to_string(), "x1");
        assert_eq!(f.components[2], Expr::zero());

        let c = parse("x1^2 + x2^2 + x3^2").unwrap();
        let zero = hamiltonian_vector_field(&so3(), &c);
        for comp in &zero.components {
            assert!(at(comp, [0.4, -1.2, 0.9]).abs() < 1e-14);
        }

        let darboux = StructureMatrix::parse("1", "0", "0", cube()).unwrap();
        let h = parse("x1^2*x2 + x3").unwrap();
        let g = hamiltonian_vector_field(&darboux, &h);
        assert_eq!(g.components[0], h.diff(Var::X2));
        assert_eq!(g.components[1], (-h.diff(Var::X1)).simplify());
        assert_eq!(g.components[2], Expr::zero());
    }

    #[test]
    fn rank_examples() {
        let s = so3();
        assert_eq!(rank_at(&s, &Point::new([0.0; 3]), RANK_TOL).unwrap(), Rank::Zero);
        assert_eq!(rank_at(&s, &Point::new([1.0, 0.0, 0.0]), RANK_TOL).unwrap(), Rank::Two);
        let darboux = StructureMatrix::parse("1", "0", "0", cube()).unwrap();
        assert_eq!(rank_at(&darboux, &Point::new([-1.5, 0.3, 1.9]), RANK_TOL).unwrap(), Rank::Two);
        let survey = rank_survey(&darboux, &SamplingConfig::default()).unwrap();
        assert_eq!(survey.degenerate, 0);
    }
}
