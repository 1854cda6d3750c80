//! Three-dimensional Poisson structures: verification of the Jacobi
//! identity, and construction of new solution families from a known one.
//!
//! A structure matrix is stored through its three independent entries
//! `u = J12`, `v = J31`, `w = J23`. Identities are checked by evaluating
//! residual expressions at seeded random points of a domain box.
//!
//! ```
//! use poisson3_core::{catalog, family, verify::SamplingConfig, parse};
//!
//! let so3 = catalog::get("so3").unwrap();
//! let cfg = SamplingConfig::default();
//! let fam = family::case1_family(&so3.structure, &so3.casimir, &parse("k1*k2").unwrap(), &cfg).unwrap();
//! let member = fam.materialize().unwrap();
//! assert!(poisson3_core::check_jacobi(&member, &cfg).unwrap().is_zero());
//! ```

pub mod catalog;
pub mod document;
pub mod error;
pub mod expr;
pub mod family;
pub mod poisson;
pub mod transform;
pub mod verify;

pub use catalog::{CatalogEntry, Case3Setup};
pub use document::StructureDocument;
pub use error::{Error, EvalError, ParseError, Result};
pub use expr::{is_zero_on, parse, Chart, Domain, Env, Expr, ParamValues, Parameters, Point, Var, ZeroVerdict};
pub use family::{
    case1_family, case3_family, classify_case, integrate_characteristics, lambda_of, lv_exponents,
    quadrature_k3, verify_elimination, CaseClass, Elimination, K3Quadrature, SolutionFamily, Trajectory,
};
pub use poisson::{bracket, is_casimir, jacobi_residual, rank_at, Rank, StructureMatrix};
pub use transform::{jacobian, pushforward, Diffeomorphism, Direction};
pub use verify::{
    check_family, check_jacobi, conservation_report, SamplingConfig, Verdict, VerificationReport,
};
