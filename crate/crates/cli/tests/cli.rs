use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn normsol(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normsol")).args(args).arg("--out").arg(out).output().unwrap()
}

fn json(out: &Path, stem: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{stem}.json"))).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ground_state_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert!(normsol(&["ground-state", "--n", "1", "--p", "5"], dir.path()).status.success());
    let doc = json(dir.path(), "ground_state");
    let sigma0 = doc["result"]["sigma0"].as_f64().unwrap();
    assert!((sigma0 - 3f64.sqrt() * std::f64::consts::PI / 4.0).abs() < 1e-9);
    assert!((sigma0 - 1.360350).abs() < 1e-6);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["p"], 5.0);

    assert!(normsol(&["ground-state", "--n", "1", "--p", "3"], dir.path()).status.success());
    let sigma0 = json(dir.path(), "ground_state")["result"]["sigma0"].as_f64().unwrap();
    assert!((sigma0 - 2.0).abs() < 1e-10);

    let csv = std::fs::read_to_string(dir.path().join("ground_state.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,U,dU"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 3);
    // 17 significant digits
    assert_eq!(first[1].split('e').next().unwrap().trim_start_matches('-').len(), 18);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = normsol(&["ground-state", "--n", "1"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("--p"));
    assert_eq!(normsol(&["ground-state", "--p", "five"], dir.path()).status.code(), Some(1));
    assert_eq!(normsol(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(normsol(&["solve", "--domain", "realline", "--bc", "neumann", "--p", "3", "--rho", "8"], dir.path()).status.code(), Some(1));
    assert_eq!(normsol(&["solve", "--p", "3", "--rho", "8", "--epsilon", "0.2"], dir.path()).status.code(), Some(1));
    assert_eq!(normsol(&["verify"], dir.path()).status.code(), Some(1));
    assert_eq!(normsol(&["trace", "--p", "5"], dir.path()).status.code(), Some(1));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "usage errors write nothing");
}

#[test]
fn help_and_version_exit_zero() {
    let out = Command::new(env!("CARGO_BIN_EXE_normsol")).arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("boundary-layer"));
    let out = Command::new(env!("CARGO_BIN_EXE_normsol")).arg("--version").output().unwrap();
    assert!(out.status.success());
}

#[test]
fn computational_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let over = normsol(&["solve", "--domain", "interval", "--bc", "dirichlet", "--p", "5", "--rho", "2.8"], dir.path());
    assert_eq!(over.status.code(), Some(2));
    assert!(stderr(&over).contains("NoSolutionInRegime"));
    assert_eq!(normsol(&["verify", "--theorem", "nope"], dir.path()).status.code(), Some(2));
    // not strictly decreasing
    let trace = normsol(&["trace", "--p", "5", "--epsilons", "0.2,0.3", "--continuation", "true"], dir.path());
    assert_eq!(trace.status.code(), Some(2));
    assert_eq!(normsol(&["correction", "--n", "2", "--p", "3", "--method", "oracle"], dir.path()).status.code(), Some(2));
}

#[test]
fn dirichlet_below_critical_mass_solves() {
    let dir = tempfile::tempdir().unwrap();
    let two_sigma0 = 3f64.sqrt() * std::f64::consts::PI / 2.0;
    let rho = (two_sigma0 - 0.01).to_string();
    let run = normsol(&["solve", "--domain", "interval", "--bc", "dirichlet", "--p", "5", "--rho", &rho], dir.path());
    assert!(run.status.success(), "{}", stderr(&run));
    let r = &json(dir.path(), "solve")["result"];
    assert!((r["mass"].as_f64().unwrap() - (two_sigma0 - 0.01)).abs() < 1e-8);
    assert!(r["residual_inf"].as_f64().unwrap() < 1e-9);
    let eps = r["epsilon"].as_f64().unwrap();
    assert!((r["lambda"].as_f64().unwrap() * eps * eps - 1.0).abs() < 1e-12);
}

#[test]
fn config_file_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# cubic on the line\ndomain = realline\np = 5\nrho = 8\n").unwrap();
    let out = dir.path().join("out");
    let run = normsol(&["solve", "--config", file.to_str().unwrap(), "--p", "3"], &out);
    assert!(run.status.success(), "{}", stderr(&run));
    let doc = json(&out, "solve");
    assert_eq!(doc["config"]["p"], 3.0);
    assert_eq!(doc["config"]["domain"], "realline");
    assert!((doc["result"]["lambda"].as_f64().unwrap() - 4.0).abs() < 1e-6);

    std::fs::write(&file, "colour = blue\n").unwrap();
    assert_eq!(normsol(&["solve", "--config", file.to_str().unwrap()], &out).status.code(), Some(1));
    let absent = dir.path().join("absent.cfg");
    assert_eq!(normsol(&["solve", "--config", absent.to_str().unwrap()], &out).status.code(), Some(1));
}

#[test]
fn boundary_layer_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(normsol(&["boundary-layer", "--epsilon", "0.2", "--bc", "neumann", "--points", "21"], dir.path()).status.success());
    let r = &json(dir.path(), "boundary_layer")["result"];
    let (quad, closed) = (r["theta_quadrature"].as_f64().unwrap(), r["theta_closed_form"].as_f64().unwrap());
    assert!(quad < 0.0, "Neumann layers lower the mass");
    assert!((quad / closed - 1.0).abs() < 1e-10);
    let csv = std::fs::read_to_string(dir.path().join("boundary_layer.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn mfg_transform() {
    let dir = tempfile::tempdir().unwrap();
    let run = normsol(&["mfg", "--bc", "neumann", "--p", "5", "--epsilon", "0.3"], dir.path());
    assert!(run.status.success(), "{}", stderr(&run));
    let r = &json(dir.path(), "mfg")["result"];
    assert_eq!(r["q"], 2.0);
    assert!(r["mass_defect"].as_f64().unwrap() < 1e-10);
    assert!(r["residual_hjb"].as_f64().unwrap() < 1e-3);
    // q must match p
    assert_eq!(normsol(&["mfg", "--bc", "neumann", "--p", "5", "--epsilon", "0.3", "--q", "1"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let run = normsol(&["verify", "--theorem", "residual_order"], dir.path());
    assert!(run.status.success(), "{}", stderr(&run));
    let doc = json(dir.path(), "verify_residual_order");
    assert_eq!(doc["result"]["theorem_id"], "residual_order");
    assert!(doc["result"]["pass"].is_boolean());
    let csv = std::fs::read_to_string(dir.path().join("verify_residual_order.csv")).unwrap();
    assert!(csv.starts_with("quantity,epsilon,predicted,observed\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn trace_writes_every_point_and_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let run = normsol(&["trace", "--p", "5", "--bc", "dirichlet", "--epsilons", "0.3,0.25,0.2", "--continuation", "true"], dir.path());
    assert!(run.status.success(), "{}", stderr(&run));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let gaps: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 3);
    assert!(gaps.iter().all(|&g| g < 0.0));
    let names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}
