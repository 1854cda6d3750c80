//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use poisson3_core::catalog::{self, CatalogEntry};
use poisson3_core::expr::{Chart, Expr, Var};
use poisson3_core::family::{
    ansatz, case1_family, case3_family, check_pde, integrate_characteristics, lambda_of, lv_exponents,
    pde_residual, quadrature_k3, verify_elimination, QuadraturePath, SolutionFamily,
};
use poisson3_core::transform::{pushforward, Diffeomorphism};
use poisson3_core::verify::{check_family, conservation_report, sample_exprs, sample_residual, SamplingConfig};
use poisson3_core::{check_jacobi, is_casimir, jacobi_residual, parse, Domain, Error, Point, StructureMatrix};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const PSI_SET: [&str; 6] = ["0", "1", "k1", "k2", "k1*k2", "k1^2 - k2"];
const CASE_I: [&str; 4] = ["constant", "so3", "ray_optics", "darboux"];

fn p(text: &str) -> Expr {
    parse(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn entry(name: &str) -> CatalogEntry {
    catalog::get(name).unwrap()
}

fn all_entries() -> Vec<CatalogEntry> {
    catalog::list().into_iter().map(|(n, _)| entry(n)).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let cfg = SamplingConfig::default();
    let mut worst: f64 = 0.0;
    for e in all_entries() {
        let r = check_jacobi(&e.structure, &cfg).map_err(err)?;
        ensure(r.is_zero() && r.max_abs_residual < 1e-9, || {
            format!("{}: Jacobi residual {:e}", e.name, r.max_abs_residual)
        })?;
        worst = worst.max(r.max_abs_residual);
        let c = is_casimir(&e.casimir, &e.structure, &cfg).map_err(err)?;
        ensure(c.is_zero(), || format!("{}: Casimir residual {:e}", e.name, c.max_abs_residual))?;
    }
    Ok(format!("6 structures, worst Jacobi residual {worst:e}"))
}

fn criterion_2() -> Outcome {
    let expected = [
        ("constant", "0"),
        ("so3", "0"),
        ("ray_optics", "0"),
        ("kermack_mckendrick", "r*(x1 - x2) - a"),
        ("lotka_volterra", "(a31 - a12)*x1 + (a12 - a23)*x2 + (a23 - a31)*x3"),
    ];
    let cfg = SamplingConfig::default().with_points(100).with_tol(1e-10);
    let mut worst: f64 = 0.0;
    for (name, formula) in expected {
        let e = entry(name);
        let r = sample_exprs(&[lambda_of(&e.structure) - p(formula)], e.domain(), e.params(), &cfg)
            .map_err(err)?;
        ensure(r.is_zero(), || format!("{name}: λ differs by {:e}", r.max_abs_residual))?;
        worst = worst.max(r.max_abs_residual);
    }
    Ok(format!("5 structures, max deviation {worst:e}"))
}

/// Random polynomial of total degree at most 3 with coefficients in [-1, 1].
fn random_polynomial(rng: &mut ChaCha8Rng) -> Expr {
    let mut acc = Expr::zero();
    for _ in 0..rng.random_range(2..6) {
        let mut term = Expr::Const(rng.random_range(-1.0..1.0));
        for _ in 0..rng.random_range(0..4) {
            term = term * Expr::Var(Var::X[rng.random_range(0..3)]);
        }
        acc = acc + term;
    }
    acc
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SamplingConfig::default().with_points(100).with_tol(1e-8);
    let mut worst: f64 = 0.0;
    for name in ["so3", "kermack_mckendrick"] {
        let e = entry(name);
        for _ in 0..20 {
            let xi = random_polynomial(&mut rng);
            let diff = jacobi_residual(&ansatz(&e.structure, &xi)) - pde_residual(&e.structure, &xi);
            let r = sample_exprs(&[diff], e.domain(), e.params(), &cfg).map_err(err)?;
            ensure(r.is_zero(), || format!("{name}, ξ = {xi}: mismatch {:e}", r.max_abs_residual))?;
            worst = worst.max(r.max_abs_residual);
        }
    }
    Ok(format!("40 perturbations, max mismatch {worst:e}"))
}

fn case1(name: &str) -> Result<SolutionFamily, String> {
    let e = entry(name);
    case1_family(&e.structure, &e.casimir, &Expr::zero(), &SamplingConfig::default()).map_err(err)
}

fn psi_set() -> Vec<Expr> {
    PSI_SET.iter().map(|t| p(t)).collect()
}

fn criterion_4() -> Outcome {
    let cfg = SamplingConfig::default().with_tol(1e-8);
    let mut worst: f64 = 0.0;
    for name in CASE_I {
        let report = check_family(&case1(name)?, &psi_set(), &cfg).map_err(err)?;
        for m in &report.members {
            ensure(m.report.is_zero(), || {
                format!("{name}, ψ = {}: residual {:e}", m.psi, m.report.max_abs_residual)
            })?;
            worst = worst.max(m.report.max_abs_residual);
        }
    }
    Ok(format!("4 bases × 6 generators, worst residual {worst:e}"))
}

fn criterion_5() -> Outcome {
    let km = entry("kermack_mckendrick");
    let cfg = SamplingConfig::default();

    let mut with_k = km.structure.clone();
    with_k.params.set("k", 0.7);
    let pde = check_pde(&with_k, &p("k*x1*x2"), &cfg).map_err(err)?;
    ensure(pde.is_zero(), || format!("ξ = k x1 x2 residual {:e}", pde.max_abs_residual))?;

    let elim = km.elimination.clone().ok_or("missing elimination")?;
    let er = verify_elimination(&km.structure, &elim, &cfg).map_err(err)?;
    ensure(er.is_zero(), || format!("elimination residual {:e}", er.max_abs_residual))?;

    // Along each characteristic (a level set of K1, K2), the numeric K3 of
    // ξ = x1 x2 divided by (ξ/x2) exp(r x3/a) must be constant.
    let (r, a) = (1.0, 1.0);
    let closed = |x: [f64; 3], xi: f64| xi / x[1] * (r * x[2] / a).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10 {
        let x0 = km.domain().sample(&mut rng);
        let traj = integrate_characteristics(&km.structure, &Point::new(x0), 1.0, 1e-3, None).map_err(err)?;
        let q = quadrature_k3(&km.structure, elim.clone(), QuadraturePath::from_pivot(x0[2]), &cfg).map_err(err)?;
        let ratio = |x: [f64; 3]| -> Result<f64, String> {
            let xi = x[0] * x[1];
            Ok(q.k3(x, xi).map_err(err)? / closed(x, xi))
        };
        let reference = ratio(x0)?;
        for s in traj.samples.iter().step_by(50) {
            let dev = (ratio(s.x)? / reference - 1.0).abs();
            worst_ratio = worst_ratio.max(dev);
        }
    }
    ensure(worst_ratio < 1e-5, || format!("K3 ratio varies by {worst_ratio:e} on a level set"))?;

    let x0 = [1.0, 2.0, 3.0];
    let traj = integrate_characteristics(&km.structure, &Point::new(x0), 1.0, 1e-3, Some(x0[0] * x0[1])).map_err(err)?;
    ensure(traj.is_complete(), || format!("trajectory halted: {:?}", traj.halt))?;
    let q = quadrature_k3(&km.structure, elim, QuadraturePath::from_pivot(x0[2]), &cfg).map_err(err)?;
    let drift = conservation_report(&traj, &[&q]).map_err(err)?[0].max_drift;
    ensure(drift < 1e-5, || format!("carried-ξ K3 drift {drift:e}"))?;
    Ok(format!(
        "PDE residual {:e}, elimination {:e}, K3 ratio spread {worst_ratio:e}, K3 drift {drift:e}",
        pde.max_abs_residual, er.max_abs_residual
    ))
}

fn criterion_6() -> Outcome {
    let (a12, a31, a23) = (1.0, 1.0, 4.0);
    let ex = lv_exponents(a12, a31, a23).map_err(err)?;
    let products = [a12 * ex.alpha * ex.beta, a31 * ex.alpha * ex.gamma, a23 * ex.beta * ex.gamma];
    ensure(products == [1.0; 3] && ex.sign == 1.0, || format!("exponent products {products:?}"))?;

    let lv = entry("lotka_volterra");
    let phi = Diffeomorphism::power_map([ex.alpha, ex.beta, ex.gamma], lv.domain().clone()).map_err(err)?;
    let pushed = pushforward(&lv.structure, &phi).map_err(err)?;
    let want = ["y1*y2", "y1*y3", "y2*y3"].map(|t| Expr::Const(ex.sign) * p(t));
    let mismatch: Vec<Expr> = pushed.entries().into_iter().zip(&want).map(|(g, w)| g - w).collect();
    let cfg = SamplingConfig::default();
    let pr = sample_exprs(&mismatch, &pushed.domain, &pushed.params, &cfg).map_err(err)?;
    ensure(pr.is_zero(), || format!("pushforward mismatch {:e}", pr.max_abs_residual))?;

    let setup = lv.case3.clone().ok_or("missing Case III data")?;
    let fam = case3_family(&lv.structure, &setup.phi, &setup.target, &setup.casimir_y, &Expr::zero(), &cfg)
        .map_err(err)?;
    let psis = ["k1", "k2", "k1*k2"].map(p);
    let report = check_family(&fam, &psis, &cfg).map_err(err)?;
    let mut worst: f64 = 0.0;
    for m in &report.members {
        ensure(m.report.is_zero(), || format!("ψ = {}: residual {:e}", m.psi, m.report.max_abs_residual))?;
        worst = worst.max(m.report.max_abs_residual);
    }
    Ok(format!(
        "products exact, pushforward mismatch {:e}, family worst residual {worst:e}",
        pr.max_abs_residual
    ))
}

fn criterion_7() -> Outcome {
    let d = entry("darboux");
    let setup = d.case3.clone().ok_or("missing Case III data")?;
    let cfg = SamplingConfig::default();
    let fam = case3_family(&d.structure, &setup.phi, &setup.target, &setup.casimir_y, &Expr::zero(), &cfg)
        .map_err(err)?;
    let mut worst: f64 = 0.0;
    for psi in psi_set() {
        let m = fam.materialize_with(&psi).map_err(err)?;
        let r = sample_residual(d.domain(), d.params(), &cfg.clone().with_points(100).with_tol(1e-12), |env| {
            let x = env.coords(Chart::X).unwrap();
            let mut penv = env.clone();
            penv.bind(Var::K1, x[0] + x[1] + x[2]).bind(Var::K2, x[2]);
            let psi_v = psi.eval(&penv)?;
            let got = m.eval_entries(env)?;
            let want = [1.0 + psi_v, psi_v, psi_v];
            Ok((0..3).map(|i| (got[i] - want[i]).abs()).fold(0.0, f64::max))
        })
        .map_err(err)?;
        ensure(r.is_zero(), || format!("ψ = {psi}: deviation {:e}", r.max_abs_residual))?;
        worst = worst.max(r.max_abs_residual);
    }
    Ok(format!("6 generators, max deviation {worst:e}"))
}

fn test_diffeos(domain: &Domain) -> Vec<(&'static str, Diffeomorphism)> {
    let d = |f: [&str; 3], i: [&str; 3]| Diffeomorphism::parse(f, i, domain.clone()).unwrap();
    vec![
        ("identity", Diffeomorphism::identity(domain.clone())),
        ("scaling", d(["2*x1", "0.5*x2", "3*x3"], ["y1/2", "2*y2", "y3/3"])),
        ("translation", d(["x1 + 1", "x2 - 0.5", "x3 + 2"], ["y1 - 1", "y2 + 0.5", "y3 - 2"])),
        ("quadratic shear", d(["x1", "x2 + 0.5*x1^2", "x3"], ["y1", "y2 - 0.5*y1^2", "y3"])),
        ("exponential shear", d(["x1", "x2", "x3 + exp(x1)"], ["y1", "y2", "y3 - exp(y1)"])),
    ]
}

fn criterion_8() -> Outcome {
    let cfg = SamplingConfig::default();
    let mut worst_trip: f64 = 0.0;
    let mut worst_jacobi: f64 = 0.0;
    for e in all_entries() {
        for (label, phi) in test_diffeos(e.domain()) {
            let check = phi.check(e.params(), &cfg).map_err(err)?;
            ensure(check.valid, || format!("{label} is not a diffeomorphism on {}", e.name))?;
            let pushed = pushforward(&e.structure, &phi).map_err(err)?;
            let jr = check_jacobi(&pushed, &cfg).map_err(err)?;
            ensure(jr.is_zero(), || format!("{} under {label}: residual {:e}", e.name, jr.max_abs_residual))?;
            worst_jacobi = worst_jacobi.max(jr.max_abs_residual);

            let back = pushforward(&pushed, &phi.inverted(&e.params().values).map_err(err)?).map_err(err)?;
            let diffs: Vec<Expr> = back.entries().into_iter().zip(e.structure.entries()).map(|(b, o)| b - o).collect();
            let tr = sample_exprs(&diffs, e.domain(), e.params(), &cfg).map_err(err)?;
            ensure(tr.max_abs_residual < 1e-9, || {
                format!("{} under {label}: round trip off by {:e}", e.name, tr.max_abs_residual)
            })?;
            worst_trip = worst_trip.max(tr.max_abs_residual);
        }
    }
    Ok(format!(
        "6 bases × 5 maps, worst round trip {worst_trip:e}, worst Jacobi residual {worst_jacobi:e}"
    ))
}

fn criterion_9() -> Outcome {
    let k1 = p("x1 + x2 + x3");
    let jobs: Vec<(CatalogEntry, [f64; 3])> = CASE_I
        .iter()
        .flat_map(|name| {
            let e = entry(name);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..10).map(move |_| {
                let x0 = e.domain().sample(&mut rng);
                (e.clone(), x0)
            })
        })
        .collect();
    let results: Vec<Result<f64, String>> = jobs
        .par_iter()
        .map(|(e, x0)| {
            let traj = integrate_characteristics(&e.structure, &Point::new(*x0), 10.0, 1e-3, None).map_err(err)?;
            ensure(traj.is_complete(), || format!("{} from {x0:?} halted: {:?}", e.name, traj.halt))?;
            let drifts = conservation_report(&traj, &[&k1, &e.casimir]).map_err(err)?;
            let worst = drifts.iter().map(|d| d.max_drift).fold(0.0, f64::max);
            ensure(worst < 1e-6, || format!("{} from {x0:?}: drift {worst:e}", e.name))?;
            Ok(worst)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(format!("40 trajectories over t ∈ [0, 10], worst drift {worst:e}"))
}

fn criterion_10() -> Outcome {
    let cfg = SamplingConfig::default();
    let bad = StructureMatrix::parse("x3", "x1", "0", Domain::cube(-2.0, 2.0).unwrap()).map_err(err)?;
    let r = check_jacobi(&bad, &cfg).map_err(err)?;
    let w = r.witness.clone().ok_or("no witness for {x3, x1, 0}")?;
    ensure(!r.is_zero() && (w.residual - w.point[2].abs()).abs() < 1e-9, || {
        format!("{{x3, x1, 0}}: unexpected report {}", r.to_json())
    })?;

    let mut fam = case1("so3")?;
    fam.multipliers[0] = Expr::Const(2.0);
    let report = check_family(&fam, &psi_set()[2..], &cfg).map_err(err)?;
    ensure(!report.is_zero(), || "corrupted multiplier went undetected".into())?;

    let km = entry("kermack_mckendrick");
    match case1_family(&km.structure, &km.casimir, &p("k1"), &cfg) {
        Err(Error::Precondition { .. }) => {}
        other => return Err(format!("Case I on Kermack-McKendrick not refused: {other:?}")),
    }
    Ok("all three rejected".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("catalog soundness", criterion_1),
        ("lambda reproduction", criterion_2),
        ("linearization", criterion_3),
        ("Case I families", criterion_4),
        ("Kermack-McKendrick Case II", criterion_5),
        ("Lotka-Volterra Case III", criterion_6),
        ("Darboux Case III", criterion_7),
        ("transform laws", criterion_8),
        ("characteristics conservation", criterion_9),
        ("negative controls", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
