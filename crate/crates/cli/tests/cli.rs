//! End-to-end runs of the `sigcomp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn sigcomp(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigcomp"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV written by the tool (provenance comment and header skipped).
fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().skip(2).map(str::to_owned).collect()
}

fn edited_symq(dir: &TempDir, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(config("symq.toml")).unwrap();
    assert!(text.contains(from));
    let path = dir.path().join("edited.toml");
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn solve_writes_the_benchmark_cutoffs() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&config("symq.toml"), dir.path(), &["solve", "--density-at", "0.1,-0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cutoffs = json(&dir.path().join("cutoffs.json"));
    assert!((cutoffs["theta_2"].as_f64().unwrap() - 0.25).abs() <= 1e-6);
    assert!((cutoffs["theta_1"].as_f64().unwrap() + 0.25).abs() <= 1e-6);
    let hash = cutoffs["config_sha256"].as_str().unwrap().to_owned();
    for name in ["swing.csv", "strategies.csv", "densities.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().next().unwrap().ends_with(&format!("config_sha256={hash}")), "{name}");
    }
    let swing = std::fs::read_to_string(dir.path().join("swing.csv")).unwrap();
    assert_eq!(swing.lines().nth(1), Some("r,s_of_r"));
    for row in data_rows(&dir.path().join("swing.csv")) {
        let (r, s) = row.split_once(',').unwrap();
        let (r, s): (f64, f64) = (r.parse().unwrap(), s.parse().unwrap());
        assert!((s + r).abs() <= 1e-4);
    }
    let strategies = std::fs::read_to_string(dir.path().join("strategies.csv")).unwrap();
    assert_eq!(strategies.lines().nth(1), Some("theta,alpha_1,alpha_2,s1_lo,s1_hi,s2_lo,s2_hi"));
    assert_eq!(data_rows(&dir.path().join("strategies.csv")).len(), 201);
    let manifest = json(&dir.path().join("manifest_solve.json"));
    assert_eq!(manifest["config_sha256"].as_str(), Some(hash.as_str()));
}

#[test]
fn invalid_intensity_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_symq(&dir, "k_1 = 1.0", "k_1 = -1.0");
    let o = sigcomp(&cfg, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k_1 must be positive"), "{}", stderr(&o));
}

#[test]
fn small_state_space_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_symq(&dir, "theta_min = -1.0", "theta_min = -0.5");
    let o = sigcomp(&cfg, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("must cover the conflict region"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&dir.path().join("missing.toml"), dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_on_the_benchmark_and_reuses_the_solve() {
    let solved = TempDir::new().unwrap();
    assert!(sigcomp(&config("symq.toml"), solved.path(), &["solve"]).status.success());
    let o = sigcomp(&config("symq.toml"), solved.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&solved.path().join("manifest_verify.json"));
    assert_eq!(manifest["reused_solve"], serde_json::Value::Bool(true));
    assert_eq!(json(&solved.path().join("verification.json"))["passed"], serde_json::Value::Bool(true));

    // A fresh directory recomputes the solve and reaches the same report.
    let fresh = TempDir::new().unwrap();
    let o = sigcomp(&config("symq.toml"), fresh.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&fresh.path().join("manifest_verify.json"))["reused_solve"], serde_json::Value::Bool(false));
    assert_eq!(
        std::fs::read(fresh.path().join("verification.json")).unwrap(),
        std::fs::read(solved.path().join("verification.json")).unwrap()
    );
}

#[test]
fn stale_solve_artifacts_are_not_reused() {
    let dir = TempDir::new().unwrap();
    assert!(sigcomp(&config("symq.toml"), dir.path(), &["solve"]).status.success());
    let o = sigcomp(&config("asymmetric.toml"), dir.path(), &["verify", "--pair-grid-n", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("manifest_verify.json"))["reused_solve"], serde_json::Value::Bool(false));
}

#[test]
fn verify_exits_nonzero_when_thresholds_are_exceeded() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&config("symq.toml"), dir.path(), &["verify", "--pair-grid-n", "0", "--tolerance-factor", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("verification failed"));
    assert_eq!(json(&dir.path().join("verification.json"))["passed"], serde_json::Value::Bool(false));
}

#[test]
fn simulation_is_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["simulate", "--seed", "7", "--draws", "100000"];
    assert!(sigcomp(&config("symq.toml"), a.path(), &args).status.success());
    assert!(sigcomp(&config("symq.toml"), b.path(), &args).status.success());
    let csv_a = std::fs::read(a.path().join("simulation.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.path().join("simulation.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(
        text.lines().nth(1),
        Some("theta_bin,n,p_reveal_mc,p_reveal_an,p_match_mc,p_match_an,p_plus,dm_welfare")
    );
    assert_eq!(data_rows(&a.path().join("simulation.csv")).len(), 64);
    let other = TempDir::new().unwrap();
    assert!(sigcomp(&config("symq.toml"), other.path(), &["simulate", "--seed", "8", "--draws", "100000"]).status.success());
    assert_ne!(
        std::fs::read(other.path().join("simulation.csv")).unwrap(),
        std::fs::read(a.path().join("simulation.csv")).unwrap()
    );
}

#[test]
fn welfare_frontier_follows_the_q_grid() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&config("symq.toml"), dir.path(), &["welfare", "--q-grid", "0:1:0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&dir.path().join("frontier.csv"));
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0], "0.0,0.0,0.0,false");
    assert!(rows[20].starts_with("1.0,0.0,0.25"));
    let w = json(&dir.path().join("welfare.json"));
    assert_eq!(w["ordering_holds"], serde_json::Value::Bool(true));
    assert!(w["q_star"].as_f64().unwrap() < 1.0);

    let o = sigcomp(&config("symq.toml"), dir.path(), &["welfare", "--q-grid", "0:1:0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn benchmarks_trace_the_pooling_witness() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&config("fre.toml"), dir.path(), &["benchmarks"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = json(&dir.path().join("benchmarks.json"));
    let fre = &b["fre"];
    assert_eq!(fre["applicable"], serde_json::Value::Bool(true));
    assert!(fre["policies"][0]["max_gain_1"].as_f64().unwrap() <= 1e-6);
    let predicted = fre["predicted_unprejudiced_gain"].as_f64().unwrap();
    assert!((fre["observed_unprejudiced_gain"].as_f64().unwrap() - predicted).abs() <= 1e-6);
    assert!((b["welfare"]["full_information"].as_f64().unwrap() - 0.25).abs() <= 1e-9);

    let o = sigcomp(&config("symq.toml"), dir.path(), &["benchmarks"]);
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("benchmarks.json"))["fre"]["applicable"], serde_json::Value::Bool(false));
}

#[test]
fn beliefs_report_posterior_and_action() {
    let dir = TempDir::new().unwrap();
    let o = sigcomp(&config("symq.toml"), dir.path(), &["beliefs", "--r1", "0.4", "--r2", "-0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = json(&dir.path().join("beliefs.json"));
    assert_eq!(b["action"], "plus");
    assert_eq!(b["kind"], "bayes");
    assert_eq!(b["quantiles"].as_array().unwrap().len(), 5);
}
