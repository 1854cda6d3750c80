use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poisson3"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("poisson3-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn export(name: &str) -> PathBuf {
    let o = run(&["catalog", "--export", name]);
    assert!(o.status.success(), "{}", stderr(&o));
    write_temp(&format!("{name}.json"), &stdout(&o))
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn catalog_lists_six_entries() {
    let o = run(&["catalog", "--list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("darboux"));
}

#[test]
fn unknown_export_is_an_input_error() {
    let o = run(&["catalog", "--export", "unknown"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown"));
}

#[test]
fn exported_so3_verifies_through_a_pipe() {
    let doc = stdout(&run(&["catalog", "--export", "so3"]));
    let o = run_stdin(&["verify", "-"], &doc);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&stdout(&o));
    assert_eq!(report["verdict"], "Zero");
    for key in ["verdict", "max_abs_residual", "mean_abs_residual", "n_samples", "seed", "witness", "skipped"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn broken_structure_exits_one_with_witness() {
    let path = write_temp("broken.json", r#"{"u": "x3", "v": "x1", "w": "0"}"#);
    let o = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&stdout(&o));
    assert_eq!(report["verdict"], "NonZero");
    assert!(report["witness"]["residual"].as_f64().unwrap() > 1e-9);
}

#[test]
fn malformed_formula_exits_two() {
    let path = write_temp("malformed.json", r#"{"u": "x3 +", "v": "x1", "w": "0"}"#);
    let o = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax error"));
}

#[test]
fn lambda_reports_case() {
    let o = run(&["lambda", export("so3").to_str().unwrap()]);
    let v = json(&stdout(&o));
    assert_eq!(v["lambda"], "0");
    assert_eq!(v["case"], "I");

    let o = run(&["lambda", export("constant").to_str().unwrap()]);
    assert_eq!(json(&stdout(&o))["lambda"], "0");

    let o = run(&["lambda", export("kermack_mckendrick").to_str().unwrap()]);
    let v = json(&stdout(&o));
    assert_eq!(v["case"], "II or III");
    assert_eq!(v["report"]["verdict"], "NonZero");
    // Compare with r*(x1 - x2) - a by evaluation at a few points.
    let lambda: poisson3_core::Expr = v["lambda"].as_str().unwrap().parse().unwrap();
    let params = poisson3_core::ParamValues::from([("r".to_string(), 1.0), ("a".to_string(), 1.0)]);
    for x in [[0.5, 1.0, 2.0], [3.0, 0.2, 0.7]] {
        let env = poisson3_core::Env::at(&params, poisson3_core::Chart::X, x);
        assert!((lambda.eval(&env).unwrap() - (x[0] - x[1] - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn generate_so3_family_member() {
    let o = run(&["generate", export("so3").to_str().unwrap(), "--psi", "k1 + k2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&stdout(&o));
    let u: poisson3_core::Expr = doc["u"].as_str().unwrap().parse().unwrap();
    let x = [0.3, -1.2, 0.9];
    let want = x[2] + (x[0] + x[1] + x[2]) + (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    let got = u.eval_at(&poisson3_core::Point::new(x)).unwrap();
    assert!((got - want).abs() < 1e-12);
    assert_eq!(json(&stderr(&o))["verdict"], "Zero");

    let again = run_stdin(&["verify", "-"], &stdout(&o));
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn generate_lotka_volterra_case3() {
    let o = run(&["generate", export("lotka_volterra").to_str().unwrap(), "--case", "3", "--psi", "k1*k2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again = run_stdin(&["verify", "-"], &stdout(&o));
    assert_eq!(again.status.code(), Some(0), "{}", stdout(&again));
}

#[test]
fn generate_darboux_with_named_target() {
    let o = run(&["generate", export("darboux").to_str().unwrap(), "--case", "3", "--target", "darboux", "--psi", "k1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn generate_with_diffeo_file() {
    // so(3) is Case I already; the identity reproduces the Case I family.
    let diffeo = write_temp("id.json", r#"{"forward": ["x1", "x2", "x3"], "inverse": ["y1", "y2", "y3"]}"#);
    let target = write_temp("so3y.json", r#"{"u": "y3", "v": "y2", "w": "y1", "casimir": "y1^2 + y2^2 + y3^2"}"#);
    let o = run(&[
        "generate",
        export("so3").to_str().unwrap(),
        "--case",
        "3",
        "--diffeo",
        diffeo.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--psi",
        "k2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn case1_refused_for_kermack_mckendrick() {
    let o = run(&["generate", export("kermack_mckendrick").to_str().unwrap(), "--psi", "k1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("λ"));
}

#[test]
fn characteristics_csv_for_so3() {
    let o = run(&["characteristics", export("so3").to_str().unwrap(), "--from", "1,2,3", "--t-end", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,K1,drift_K1,C,drift_C");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2001);
    assert!(rows.iter().all(|r| r[5] < 1e-6 && r[7] < 1e-6));
    let summary = json(stderr(&o).trim());
    assert_eq!(summary["complete"], true);
}

#[test]
fn characteristics_of_equal_constants_stay_put() {
    let path = write_temp("equal.json", r#"{"u": "2", "v": "2", "w": "2"}"#);
    let o = run(&["characteristics", path.to_str().unwrap(), "--from", "0.1,-0.2,0.3", "--t-end", "0.01"]);
    let text = stdout(&o);
    let points: std::collections::BTreeSet<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1)
        .collect();
    assert_eq!(points.len(), 1);
    assert_eq!(json(stderr(&o).trim())["stationary"], true);
}

#[test]
fn characteristics_carry_xi_for_kermack_mckendrick() {
    let o = run(&[
        "characteristics",
        export("kermack_mckendrick").to_str().unwrap(),
        "--from",
        "1,2,3",
        "--t-end",
        "1",
        "--carry-xi",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().ends_with("K3,drift_K3"));
    let summary = json(stderr(&o).trim());
    let k3 = summary["drift"].as_array().unwrap().iter().find(|d| d["quantity"] == "K3").unwrap();
    assert!(k3["max_drift"].as_f64().unwrap() < 1e-5);
}

#[test]
fn outputs_are_deterministic() {
    let path = write_temp("broken2.json", r#"{"u": "x3", "v": "x1", "w": "0"}"#);
    let a = run(&["--seed", "7", "--points", "200", "verify", path.to_str().unwrap()]);
    let b = run(&["verify", path.to_str().unwrap(), "--seed", "7", "--points", "200"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&stdout(&a))["n_samples"], 200);
}

#[test]
fn catalog_overrides() {
    let o = run(&["catalog", "--export", "kermack_mckendrick", "--set", "r=2"]);
    assert!(o.status.success());
    assert_eq!(json(&stdout(&o))["parameters"]["r"]["value"], 2.0);
    let o = run(&["catalog", "--export", "so3", "--set", "q=1"]);
    assert_eq!(o.status.code(), Some(2));
}
