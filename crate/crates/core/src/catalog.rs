//! Built-in structures with their Casimirs, expected λ and, where known,
//! the extra data needed by the Case II and Case III constructions.

use crate::error::{Error, Result};
use crate::expr::{parse, Chart, Domain, Expr, ParamValues, Parameters, Var};
use crate::family::{lv_exponents, Elimination};
use crate::poisson::StructureMatrix;
use crate::transform::Diffeomorphism;

/// Target data for the Case III construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Case3Setup {
    pub phi: Diffeomorphism,
    pub target: StructureMatrix,
    pub casimir_y: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub structure: StructureMatrix,
    pub casimir: Expr,
    pub lambda_expected: Expr,
    pub notes: &'static str,
    pub elimination: Option<Elimination>,
    pub case3: Option<Case3Setup>,
}

impl CatalogEntry {
    pub fn domain(&self) -> &Domain {
        &self.structure.domain
    }

    pub fn params(&self) -> &Parameters {
        &self.structure.params
    }
}

struct Spec {
    name: &'static str,
    description: &'static str,
    notes: &'static str,
    entries: [&'static str; 3],
    casimir: &'static str,
    lambda: &'static str,
    defaults: &'static [(&'static str, f64)],
    positive: bool,
}

const SPECS: [Spec; 6] = [
    Spec {
        name: "constant",
        description: "constant structure {u0, v0, w0} on the cube (-2, 2)^3",
        notes: "any constant triple; defaults (1, 2, 3)",
        entries: ["u0", "v0", "w0"],
        casimir: "w0*x1 + v0*x2 + u0*x3",
        lambda: "0",
        defaults: &[("u0", 1.0), ("v0", 2.0), ("w0", 3.0)],
        positive: false,
    },
    Spec {
        name: "so3",
        description: "rigid-body so(3) structure {x3, x2, x1} on the cube (-2, 2)^3",
        notes: "linear Lie-Poisson structure; rank drops at the origin",
        entries: ["x3", "x2", "x1"],
        casimir: "x1^2 + x2^2 + x3^2",
        lambda: "0",
        defaults: &[],
        positive: false,
    },
    Spec {
        name: "ray_optics",
        description: "ray optics structure {4*x3, -2*x1, -2*x2} on the cube (-2, 2)^3",
        notes: "linear structure with an indefinite quadratic Casimir",
        entries: ["4*x3", "-2*x1", "-2*x2"],
        casimir: "x1*x2 - x3^2",
        lambda: "0",
        defaults: &[],
        positive: false,
    },
    Spec {
        name: "kermack_mckendrick",
        description: "Kermack-McKendrick epidemic structure {-r*x1*x2, 0, -a*x2} on the positive orthant box (0.1, 5)^3",
        notes: "lambda does not vanish; Case II via elimination along x3; defaults r = a = 1",
        entries: ["-r*x1*x2", "0", "-a*x2"],
        casimir: "x3 + (a/r)*ln(x1)",
        lambda: "r*(x1 - x2) - a",
        defaults: &[("r", 1.0), ("a", 1.0)],
        positive: true,
    },
    Spec {
        name: "lotka_volterra",
        description: "Lotka-Volterra structure {a12*x1*x2, a31*x1*x3, a23*x2*x3} on the positive orthant box (0.1, 5)^3",
        notes: "Case III through a power map; defaults a12 = 1, a31 = 1, a23 = 4",
        entries: ["a12*x1*x2", "a31*x1*x3", "a23*x2*x3"],
        casimir: "x1^a23*x2^a31*x3^a12",
        lambda: "(a31 - a12)*x1 + (a12 - a23)*x2 + (a23 - a31)*x3",
        defaults: &[("a12", 1.0), ("a31", 1.0), ("a23", 4.0)],
        positive: true,
    },
    Spec {
        name: "darboux",
        description: "Darboux canonical form {1, 0, 0} on the cube (-2, 2)^3",
        notes: "rank-2 constant normal form, used as a Case III target",
        entries: ["1", "0", "0"],
        casimir: "x3",
        lambda: "0",
        defaults: &[],
        positive: false,
    },
];

/// Names and one-line descriptions, in a fixed order.
pub fn list() -> Vec<(&'static str, &'static str)> {
    SPECS.iter().map(|s| (s.name, s.description)).collect()
}

pub fn get(name: &str) -> Result<CatalogEntry> {
    get_with(name, &ParamValues::new())
}

/// Like [`get`], with some default parameter values replaced.
pub fn get_with(name: &str, overrides: &ParamValues) -> Result<CatalogEntry> {
    let spec = SPECS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))?;
    let mut params = Parameters::from_values(spec.defaults.iter().copied());
    for (k, v) in overrides {
        if params.get(k).is_none() {
            return Err(Error::InvalidArgument(format!("`{name}` has no parameter `{k}`")));
        }
        params.set(k.clone(), *v);
    }

    let domain = if spec.positive {
        Domain::positive_orthant(0.1, 5.0)?
    } else {
        Domain::cube(-2.0, 2.0)?
    };
    let [u, v, w] = spec.entries;
    let structure = StructureMatrix::parse(u, v, w, domain.clone())?.with_params(params.clone());

    let elimination = match spec.name {
        "kermack_mckendrick" => Some(Elimination::new(
            Var::X3,
            parse("x1 + x2 + x3")?,
            parse(spec.casimir)?,
            parse("exp((r/a)*(k2 - x3))")?,
            parse("k1 - x3 - exp((r/a)*(k2 - x3))")?,
        )?),
        _ => None,
    };

    let case3 = match spec.name {
        "lotka_volterra" => {
            let value = |k: &str| params.get(k).expect("declared default");
            let e = lv_exponents(value("a12"), value("a31"), value("a23"))?;
            let phi = Diffeomorphism::power_map([e.alpha, e.beta, e.gamma], domain.clone())?;
            let target_domain = phi.image_domain(&domain, &params.values)?;
            let sign = Expr::Const(e.sign);
            let target = StructureMatrix::new(
                (&sign * parse("y1*y2")?).simplify(),
                (&sign * parse("y1*y3")?).simplify(),
                (&sign * parse("y2*y3")?).simplify(),
                target_domain,
            );
            Some(Case3Setup {
                phi,
                target,
                casimir_y: parse("y1*y2*y3")?,
            })
        }
        "darboux" => Some(Case3Setup {
            phi: Diffeomorphism::identity(domain.clone()),
            target: StructureMatrix::parse("1", "0", "0", domain.clone().in_chart(Chart::Y))?,
            casimir_y: parse("y3")?,
        }),
        _ => None,
    };

    Ok(CatalogEntry {
        name: spec.name,
        description: spec.description,
        structure,
        casimir: parse(spec.casimir)?,
        lambda_expected: parse(spec.lambda)?,
        notes: spec.notes,
        elimination,
        case3,
    })
}
