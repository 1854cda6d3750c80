use std::fmt::Write as _;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use poisson3_core::catalog::{self, Case3Setup};
use poisson3_core::document::{DiffeoSpec, StructureDocument, TargetSpec};
use poisson3_core::family::{
    self, quadrature_k3, CaseClass, K3Quadrature, QuadraturePath, SolutionFamily,
};
use poisson3_core::transform::Diffeomorphism;
use poisson3_core::verify::{drift, TrajectoryQuantity};
use poisson3_core::{
    check_jacobi, integrate_characteristics, parse, Error, Expr, ParamValues, Point, SamplingConfig,
    StructureMatrix, VerificationReport,
};

#[derive(Parser)]
#[command(name = "poisson3", version, about = "Verify and extend 3D Poisson structures")]
struct Cli {
    #[command(flatten)]
    sampling: Sampling,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sampling {
    /// Seed for the sample points.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Number of sample points per check.
    #[arg(long, global = true, default_value_t = 1000)]
    points: usize,
    /// Absolute residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Jacobi identity of a structure document.
    Verify {
        /// Structure document, or `-` for standard input.
        file: PathBuf,
    },
    /// Print λ and the case it selects.
    Lambda { file: PathBuf },
    /// Materialize a member of a solution family.
    Generate {
        file: PathBuf,
        /// Generator in k1, k2 (overrides the document's `psi`).
        #[arg(long)]
        psi: Option<String>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        /// Target structure: `darboux` or a JSON file with u, v, w, casimir in y1, y2, y3.
        #[arg(long)]
        target: Option<String>,
        /// JSON file with `forward` and `inverse` formula triples.
        #[arg(long)]
        diffeo: Option<PathBuf>,
    },
    /// Integrate the characteristic system and report drift of invariants as CSV.
    Characteristics {
        file: PathBuf,
        /// Starting point `x1,x2,x3`.
        #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
        from: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Initial ξ to carry along with dξ/dt = λ ξ.
        #[arg(long, allow_negative_numbers = true)]
        carry_xi: Option<f64>,
    },
    /// List or export built-in structures.
    Catalog {
        #[arg(long, conflicts_with = "export")]
        list: bool,
        #[arg(long)]
        export: Option<String>,
        /// Override a parameter, `name=value`.
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(String, f64)>,
    },
}

fn parse_assignment(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or("expected name=value")?;
    let value = value.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((name.trim().to_string(), value))
}

/// Input or usage error; reported on standard error with exit code 2.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut msg = e.to_string();
        if let Error::Precondition { report: Some(r), .. } = &e {
            let _ = write!(msg, "\n{}", r.to_json());
        }
        Failure(msg)
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = SamplingConfig {
        points: cli.sampling.points,
        seed: cli.sampling.seed,
        tol: cli.sampling.tol,
        ..SamplingConfig::default()
    };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Verify { file } => verify(&file, &cfg),
        Command::Lambda { file } => lambda(&file, &cfg),
        Command::Generate {
            file,
            psi,
            case,
            target,
            diffeo,
        } => generate(&file, psi.as_deref(), case, target.as_deref(), diffeo.as_deref(), &cfg),
        Command::Characteristics {
            file,
            from,
            t_end,
            step,
            carry_xi,
        } => characteristics(&file, &from, t_end, step, carry_xi),
        Command::Catalog { list, export, set } => catalog_cmd(list, export.as_deref(), &set),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &std::path::Path) -> Result<String, Failure> {
    let mut text = String::new();
    let res = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

fn load(path: &std::path::Path) -> Result<StructureDocument, Failure> {
    Ok(StructureDocument::from_json(&read_text(path)?)?)
}

fn verdict_code(report: &VerificationReport) -> ExitCode {
    if report.is_zero() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn verify(file: &std::path::Path, cfg: &SamplingConfig) -> Outcome {
    let s = load(file)?.structure()?;
    let report = check_jacobi(&s, cfg)?;
    println!("{}", report.to_json());
    Ok(verdict_code(&report))
}

fn lambda(file: &std::path::Path, cfg: &SamplingConfig) -> Outcome {
    let s = load(file)?.structure()?;
    let lambda = family::lambda_of(&s);
    let (class, report) = family::classify_case(&s, cfg)?;
    let case = match class {
        CaseClass::CaseI => "I",
        CaseClass::CaseIIOrIII => "II or III",
    };
    let out = json!({ "lambda": lambda.to_string(), "case": case, "report": report });
    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    Ok(ExitCode::SUCCESS)
}

fn generate(
    file: &std::path::Path,
    psi: Option<&str>,
    case: u8,
    target: Option<&str>,
    diffeo: Option<&std::path::Path>,
    cfg: &SamplingConfig,
) -> Outcome {
    let doc = load(file)?;
    let s = doc.structure()?;
    let psi = match psi {
        Some(text) => parse(text).map_err(Error::from)?,
        None => doc
            .psi()?
            .ok_or_else(|| Failure("no generator: pass --psi or set `psi`".into()))?,
    };
    let fam: SolutionFamily = match case {
        1 => {
            let casimir = doc
                .casimir()?
                .ok_or_else(|| Failure("case 1 needs a `casimir` in the document".into()))?;
            family::case1_family(&s, &casimir, &psi, cfg)?
        }
        3 => {
            let setup = case3_setup(&doc, target, diffeo)?;
            family::case3_family(&s, &setup.phi, &setup.target, &setup.casimir_y, &psi, cfg)?
        }
        _ => {
            return Err(Failure(
                "case 2 has no closed-form family; use `characteristics --carry-xi`".into(),
            ))
        }
    };
    let member = fam.materialize()?;
    let report = check_jacobi(&member, cfg)?;
    let mut out = StructureDocument::from_structure(&member)?;
    out.name = doc.name.map(|n| format!("{n}+family"));
    println!("{}", out.to_json());
    eprintln!("{}", report.to_json());
    Ok(verdict_code(&report))
}

fn case3_setup(
    doc: &StructureDocument,
    target: Option<&str>,
    diffeo: Option<&std::path::Path>,
) -> Result<Case3Setup, Failure> {
    let mut doc = doc.clone();
    if let Some(path) = diffeo {
        let spec: DiffeoSpec = serde_json::from_str(&read_text(path)?)
            .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        doc.diffeomorphism = Some(spec);
    }
    match target {
        Some("darboux") => {
            doc.target = Some(TargetSpec {
                u: "1".into(),
                v: "0".into(),
                w: "0".into(),
                casimir: "y3".into(),
            })
        }
        Some(path) => {
            let spec: TargetSpec = serde_json::from_str(&read_text(path.as_ref())?)
                .map_err(|e| Failure(format!("{path}: {e}")))?;
            doc.target = Some(spec);
        }
        None => {}
    }
    if doc.diffeomorphism.is_none() && doc.target.is_some() {
        let identity = Diffeomorphism::identity(doc.domain()?);
        doc.diffeomorphism = Some(DiffeoSpec {
            forward: identity.forward.map(|e| e.to_string()),
            inverse: identity.inverse.map(|e| e.to_string()),
        });
    }
    doc.case3()?
        .ok_or_else(|| Failure("case 3 needs a diffeomorphism and a target".into()))
}

fn characteristics(file: &std::path::Path, from: &[f64], t_end: f64, step: f64, carry_xi: Option<f64>) -> Outcome {
    let doc = load(file)?;
    let s: StructureMatrix = doc.structure()?;
    let x0: [f64; 3] = from
        .try_into()
        .map_err(|_| Failure("--from needs three comma-separated numbers".into()))?;
    let traj = integrate_characteristics(&s, &Point::new(x0), t_end, step, carry_xi)?;

    let [a, b, c] = s.coords().map(Expr::Var);
    let k1 = a + b + c;
    let mut quantities: Vec<(String, Box<dyn TrajectoryQuantity>)> = vec![("K1".into(), Box::new(k1))];
    if let Some(casimir) = doc.casimir()? {
        quantities.push(("C".into(), Box::new(casimir)));
    }
    if carry_xi.is_some() {
        if let Some(elim) = doc.elimination()? {
            let start = x0[elim.pivot.slot()];
            let q: K3Quadrature = quadrature_k3(
                &s,
                elim,
                QuadraturePath::from_pivot(start),
                &SamplingConfig::default(),
            )?;
            quantities.push(("K3".into(), Box::new(q)));
        }
    }

    let params: &ParamValues = &traj.params;
    let mut csv = String::from("t,x1,x2,x3");
    if carry_xi.is_some() {
        csv.push_str(",xi");
    }
    for (name, _) in &quantities {
        let _ = write!(csv, ",{name},drift_{name}");
    }
    csv.push('\n');

    let mut initial = Vec::new();
    let mut max_drift = vec![0.0_f64; quantities.len()];
    for sample in &traj.samples {
        let _ = write!(csv, "{},{},{},{}", sample.t, sample.x[0], sample.x[1], sample.x[2]);
        if let Some(xi) = sample.xi {
            let _ = write!(csv, ",{xi}");
        }
        for (i, (_, q)) in quantities.iter().enumerate() {
            let value = q.value(sample, params)?;
            if initial.len() <= i {
                initial.push(value);
            }
            let d = drift(initial[i], value);
            max_drift[i] = max_drift[i].max(d);
            let _ = write!(csv, ",{value},{d}");
        }
        csv.push('\n');
    }
    print!("{csv}");

    let drifts: Vec<_> = quantities
        .iter()
        .zip(&initial)
        .zip(&max_drift)
        .map(|(((name, _), init), max)| json!({ "quantity": name, "initial": init, "max_drift": max }))
        .collect();
    let summary = json!({
        "samples": traj.samples.len(),
        "complete": traj.is_complete(),
        "stationary": traj.stationary,
        "halt": traj.halt,
        "drift": drifts,
    });
    eprintln!("{summary}");
    Ok(ExitCode::SUCCESS)
}

fn catalog_cmd(list: bool, export: Option<&str>, set: &[(String, f64)]) -> Outcome {
    if let Some(name) = export {
        let overrides: ParamValues = set.iter().cloned().collect();
        let entry = catalog::get_with(name, &overrides)?;
        println!("{}", StructureDocument::from_entry(&entry)?.to_json());
        return Ok(ExitCode::SUCCESS);
    }
    if !list {
        return Err(Failure("pass --list or --export NAME".into()));
    }
    for (name, description) in catalog::list() {
        println!("{name}\t{description}");
    }
    Ok(ExitCode::SUCCESS)
}
