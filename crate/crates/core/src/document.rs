//! JSON structure-definition documents.
//!
//! ```json
//! {
//!   "name": "kermack_mckendrick",
//!   "variables": ["x1", "x2", "x3"],
//!   "parameters": { "r": { "value": 1.0 }, "a": { "value": 1.0, "range": [0.5, 2.0] } },
//!   "u": "-r*x1*x2", "v": "0", "w": "-a*x2",
//!   "casimir": "x3 + (a/r)*ln(x1)",
//!   "domain": { "lower": [0.1, 0.1, 0.1], "upper": [5, 5, 5], "positive": [true, true, true] },
//!   "elimination": { "pivot": "x3", "k1": "x1 + x2 + x3", "k2": "x3 + (a/r)*ln(x1)",
//!                    "alpha": "exp((r/a)*(k2 - x3))", "beta": "k1 - x3 - exp((r/a)*(k2 - x3))" },
//!   "diffeomorphism": { "forward": ["..."], "inverse": ["..."] },
//!   "target": { "u": "...", "v": "...", "w": "...", "casimir": "..." },
//!   "psi": "k1*k2"
//! }
//! ```
//!
//! Everything except `u`, `v`, `w` is optional. A missing domain means the
//! cube `(-1, 1)^3`; a missing variable list means `x1, x2, x3`. Formulas
//! may only use the declared variables, the parameters listed in
//! `parameters`, and (in `psi`, `alpha`, `beta`) the symbols `k1`, `k2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Case3Setup, CatalogEntry};
use crate::error::{Error, Result};
use crate::expr::{parse_declared, Chart, Domain, Expr, Parameters, Var};
use crate::family::Elimination;
use crate::poisson::StructureMatrix;
use crate::transform::Diffeomorphism;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    #[serde(default)]
    pub positive: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffeoSpec {
    pub forward: [String; 3],
    pub inverse: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub u: String,
    pub v: String,
    pub w: String,
    pub casimir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationSpec {
    pub pivot: String,
    pub k1: String,
    pub k2: String,
    pub alpha: String,
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_variables")]
    pub variables: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, ParameterSpec>,
    pub u: String,
    pub v: String,
    pub w: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub casimir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elimination: Option<EliminationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffeomorphism: Option<DiffeoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
}

fn default_variables() -> Vec<String> {
    Chart::X.vars().iter().map(|v| v.name().to_string()).collect()
}

impl StructureDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StructureDocument =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if doc.variables != default_variables() {
            return Err(Error::Document(format!(
                "variables must be [\"x1\", \"x2\", \"x3\"], got {:?}",
                doc.variables
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    /// A document holding just the structure, its parameters and domain.
    pub fn from_structure(s: &StructureMatrix) -> Result<Self> {
        if s.chart != Chart::X {
            return Err(Error::Document("only x-coordinate structures can be written".into()));
        }
        let parameters = s
            .params
            .values
            .iter()
            .map(|(k, v)| {
                let spec = ParameterSpec {
                    value: *v,
                    range: s.params.ranges.get(k).copied(),
                };
                (k.clone(), spec)
            })
            .collect();
        Ok(StructureDocument {
            name: None,
            variables: default_variables(),
            parameters,
            u: s.u.to_string(),
            v: s.v.to_string(),
            w: s.w.to_string(),
            casimir: None,
            domain: Some(DomainSpec {
                lower: s.domain.lower,
                upper: s.domain.upper,
                positive: s.domain.positive,
            }),
            elimination: None,
            diffeomorphism: None,
            target: None,
            psi: None,
        })
    }

    pub fn from_entry(entry: &CatalogEntry) -> Result<Self> {
        let mut doc = StructureDocument::from_structure(&entry.structure)?;
        doc.name = Some(entry.name.to_string());
        doc.casimir = Some(entry.casimir.to_string());
        doc.elimination = entry.elimination.as_ref().map(|e| EliminationSpec {
            pivot: e.pivot.name().to_string(),
            k1: e.k1.to_string(),
            k2: e.k2.to_string(),
            alpha: e.alpha.to_string(),
            beta: e.beta.to_string(),
        });
        if let Some(setup) = &entry.case3 {
            doc.diffeomorphism = Some(DiffeoSpec {
                forward: setup.phi.forward.clone().map(|e| e.to_string()),
                inverse: setup.phi.inverse.clone().map(|e| e.to_string()),
            });
            let t = &setup.target;
            doc.target = Some(TargetSpec {
                u: t.u.to_string(),
                v: t.v.to_string(),
                w: t.w.to_string(),
                casimir: setup.casimir_y.to_string(),
            });
        }
        Ok(doc)
    }

    fn declared(&self, extra: &[Var]) -> Vec<String> {
        self.parameters
            .keys()
            .cloned()
            .chain(self.variables.iter().cloned())
            .chain(extra.iter().map(|v| v.name().to_string()))
            .collect()
    }

    fn formula(&self, field: &str, text: &str, extra: &[Var]) -> Result<Expr> {
        let e = parse_declared(text, &self.declared(extra))
            .map_err(|e| Error::Document(format!("{field}: {e}")))?;
        let allowed = |v: &Var| Chart::X.vars().contains(v) || extra.contains(v);
        match e.vars().into_iter().find(|v| !allowed(v)) {
            Some(v) => Err(Error::Document(format!("{field}: symbol `{v}` is not allowed here"))),
            None => Ok(e),
        }
    }

    pub fn parameters(&self) -> Result<Parameters> {
        let mut params = Parameters::default();
        for (name, spec) in &self.parameters {
            params.set(name.clone(), spec.value);
            if let Some((lo, hi)) = spec.range {
                params = params.with_range(name.clone(), lo, hi)?;
            }
        }
        Ok(params)
    }

    pub fn domain(&self) -> Result<Domain> {
        match &self.domain {
            None => Domain::cube(-1.0, 1.0),
            Some(d) => Domain::new(d.lower, d.upper)?.with_positive(d.positive),
        }
    }

    pub fn structure(&self) -> Result<StructureMatrix> {
        let s = StructureMatrix::new(
            self.formula("u", &self.u, &[])?,
            self.formula("v", &self.v, &[])?,
            self.formula("w", &self.w, &[])?,
            self.domain()?,
        );
        Ok(s.with_params(self.parameters()?))
    }

    pub fn casimir(&self) -> Result<Option<Expr>> {
        self.casimir.as_deref().map(|c| self.formula("casimir", c, &[])).transpose()
    }

    pub fn psi(&self) -> Result<Option<Expr>> {
        self.psi
            .as_deref()
            .map(|p| self.formula("psi", p, &[Var::K1, Var::K2]))
            .transpose()
    }

    pub fn elimination(&self) -> Result<Option<Elimination>> {
        let Some(e) = &self.elimination else {
            return Ok(None);
        };
        let pivot = Var::from_name(&e.pivot)
            .filter(|v| Chart::X.vars().contains(v))
            .ok_or_else(|| Error::Document(format!("elimination pivot `{}` is not x1, x2 or x3", e.pivot)))?;
        let k = [Var::K1, Var::K2];
        Elimination::new(
            pivot,
            self.formula("elimination.k1", &e.k1, &[])?,
            self.formula("elimination.k2", &e.k2, &[])?,
            self.formula("elimination.alpha", &e.alpha, &k)?,
            self.formula("elimination.beta", &e.beta, &k)?,
        )
        .map(Some)
    }

    pub fn diffeomorphism(&self) -> Result<Option<Diffeomorphism>> {
        let Some(d) = &self.diffeomorphism else {
            return Ok(None);
        };
        let ys = Chart::Y.vars();
        let f = |i: usize| self.formula("diffeomorphism.forward", &d.forward[i], &[]);
        let g = |i: usize| self.formula("diffeomorphism.inverse", &d.inverse[i], &ys);
        let forward = [f(0)?, f(1)?, f(2)?];
        let inverse = [g(0)?, g(1)?, g(2)?];
        if inverse.iter().any(|e| e.vars().iter().any(|v| Chart::X.vars().contains(v))) {
            return Err(Error::Document("diffeomorphism.inverse must be written in y1, y2, y3".into()));
        }
        Diffeomorphism::new(forward, inverse, self.domain()?).map(Some)
    }

    /// Case III data: the diffeomorphism plus the target structure on the
    /// image of the domain.
    pub fn case3(&self) -> Result<Option<Case3Setup>> {
        let (Some(phi), Some(t)) = (self.diffeomorphism()?, &self.target) else {
            return Ok(None);
        };
        let ys = Chart::Y.vars();
        let y_only = |field: &str, text: &str| -> Result<Expr> {
            let e = self.formula(field, text, &ys)?;
            if e.vars().iter().any(|v| !ys.contains(v)) {
                return Err(Error::Document(format!("{field} must be written in y1, y2, y3")));
            }
            Ok(e)
        };
        let params = self.parameters()?;
        let domain = phi.image_domain(&self.domain()?, &params.values)?;
        let target = StructureMatrix::new(
            y_only("target.u", &t.u)?,
            y_only("target.v", &t.v)?,
            y_only("target.w", &t.w)?,
            domain,
        )
        .with_params(params);
        Ok(Some(Case3Setup {
            phi,
            target,
            casimir_y: y_only("target.casimir", &t.casimir)?,
        }))
    }
}
