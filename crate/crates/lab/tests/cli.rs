use std::path::Path;
use std::process::{Command, Output};

use crflow_lab::output::{write_atomic, TIMESERIES_COLUMNS};
use crflow_lab::{presets, scenario, CheckStatus};

fn crflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crflow")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = crflow(&["run", "flat-uniform", "--out", out.to_str().unwrap(), "--plots"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));

    let csv = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,Rmin,Rmax,pmin,pmax,p_bar,I,E,Q,dQdt,lambda,corrected_eigen,k_used,\
         hypothesis_margin,cauchy_schwarz_gap,dI_residual,eigen_residual"
    );
    assert_eq!(header, TIMESERIES_COLUMNS.join(","));
    let first = csv.lines().nth(1).unwrap();
    assert_eq!(first.split(',').count(), TIMESERIES_COLUMNS.len());
    // The series covers the observation window [t0, t1].
    assert!(first.starts_with("1.0000000000000000e-2,"), "{first}");

    let report = read_json(&out.join("report.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["command"], "run");
    assert_eq!(report["scenario"], "flat-uniform");
    assert_eq!(report["pass"], true);
    assert!(report["error"].is_null());
    assert_eq!(report["config"]["grid"]["n"], 24);
    assert_eq!(report["tolerances"]["rigidity"], 1e-4);
    assert_eq!(report["build"]["package"], "crflow-lab");
    let checks = report["checks"].as_array().unwrap();
    for name in ["unit-mass", "monotonicity", "cauchy-schwarz", "audit:self-adjoint", "audit:bochner"] {
        assert!(checks.iter().any(|c| c["name"] == name), "missing {name}");
    }
    for c in checks {
        assert!(c["pass"].is_boolean());
        let status = c["status"].as_str().unwrap();
        assert!(["pass", "fail", "informational", "not-applicable"].contains(&status), "{status}");
    }

    let svg = std::fs::read_to_string(out.join("plots.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn plots_are_off_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let res = crflow(&["run", "flat-uniform", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    assert!(!dir.path().join("plots.svg").exists());
}

#[test]
fn invalid_window_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::text("flat-uniform").unwrap().replace("t0 = 0.01", "t0 = 0.045");
    let path = write_scenario(dir.path(), &text);
    let res = crflow(&["run", &path, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("conjugate.t1"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn parse_error_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "name = \"x\"\n[grid]\nn = \"a\"\n");
    let res = crflow(&["audit", &path]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

#[test]
fn unknown_scenario_exits_two() {
    assert_eq!(code(&crflow(&["eigen", "no-such-preset"])), 2);
}

#[test]
fn runtime_abort_exits_three_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::text("perturbed-monotone").unwrap().replace("amplitude = 0.2", "amplitude = 3.0");
    let path = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let res = crflow(&["run", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["pass"], false);
    assert!(report["error"].as_str().unwrap().contains("positive definite"));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // At N = 8 the Bochner identity holds only to discretization error.
    let text = presets::text("flat-uniform").unwrap().replace("n = 24", "n = 8").replace(
        "audits = true",
        "audits = true\n\n[tolerances]\nbochner = 1e-12",
    );
    let path = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let res = crflow(&["audit", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let report = read_json(&out.join("report.json"));
    let bochner = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "audit:bochner").unwrap();
    assert_eq!(bochner["status"], "fail");
}

#[test]
fn eigen_and_converge_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eigen");
    assert_eq!(code(&crflow(&["eigen", "flat-uniform", "--out", out.to_str().unwrap()])), 0);
    assert!(std::fs::read_to_string(out.join("eigen.csv")).unwrap().starts_with("lambda,residual,iterations\n"));

    let out = dir.path().join("converge");
    let res = crflow(&["converge", "conformal-ricci-oracle", "--ns", "12,16,24", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("ricci-oracle,24,")));
}

#[test]
fn presets_subcommand_lists_and_prints() {
    let res = crflow(&["presets"]);
    assert_eq!(code(&res), 0);
    let listing = String::from_utf8(res.stdout).unwrap();
    assert_eq!(listing.lines().collect::<Vec<_>>(), presets::names().collect::<Vec<_>>());
    let res = crflow(&["presets", "forced-growth"]);
    assert_eq!(String::from_utf8(res.stdout).unwrap(), presets::text("forced-growth").unwrap());
}

#[test]
fn runs_are_deterministic() {
    let cfg = presets::load("flat-uniform").unwrap();
    let a = scenario::run(&cfg).unwrap();
    let b = scenario::run(&cfg).unwrap();
    assert_eq!(a.table("timeseries.csv"), b.table("timeseries.csv"));
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert!(a.report.checks.iter().all(|c| c.status != CheckStatus::Fail));
}

#[test]
fn atomic_write_replaces_without_leftovers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_atomic(&path, b"first").unwrap();
    write_atomic(&path, b"second").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"second");
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}
