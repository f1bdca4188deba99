//! Runs the `wlasso` binary end to end.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{random_matrix, rng};
use serde_json::Value;
use wlasso::covariance::CovarianceModel;
use wlasso::lasso::{solve_lasso, LassoConfig, SupportSpec};
use wlasso::linalg::DenseMatrix;
use wlasso::simulate::{gen_design, gen_noise, run_experiment, DesignSpec, ReplicateRecord};
use wlasso::whitening::build_problem;

fn wlasso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlasso"))
        .args(args)
        .env_remove("WLASSO_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_matrix(path: &Path, m: &DenseMatrix) {
    let mut text = (0..m.cols()).map(|j| format!("c{j}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[derive(Debug, serde::Deserialize)]
struct CoefRow {
    lambda_index: usize,
    lambda: f64,
    j: usize,
    r: usize,
    k: usize,
    beta: f64,
}

#[derive(Debug, serde::Deserialize)]
struct SupportRow {
    lambda_index: usize,
    j: usize,
    sign: i8,
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .map(Result::unwrap)
        .collect()
}

const SMOKE: &str = r#"
seed = 5
replicates = 2
n_values = [20]
q_values = [10]
[[noises]]
kind = "ar1"
phi1 = 0.5
"#;

fn smoke_config(dir: &Path) -> PathBuf {
    let path = dir.join("smoke.toml");
    fs::write(&path, SMOKE).unwrap();
    path
}

#[test]
fn identity_fit_is_columnwise_lasso() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(1);
    let x = random_matrix(&mut r, 12, 2);
    let y = random_matrix(&mut r, 12, 3);
    write_matrix(&dir.path().join("y.csv"), &y);
    write_matrix(&dir.path().join("x.csv"), &x);
    let out = dir.path().join("out");
    ok(&wlasso(&[
        "--out-dir", s(&out), "fit", s(&dir.path().join("y.csv")), s(&dir.path().join("x.csv")),
        "--cov", "identity", "--select", "fixed", "--lambda", "1.5",
    ]));
    let rows: Vec<CoefRow> = read_rows(&out.join("coefficients.csv"));
    assert_eq!(rows.len(), 6);
    let cfg = LassoConfig::default();
    for k in 0..3 {
        let yk = DenseMatrix::from_fn(12, 1, |i, _| y[(i, k)]);
        let prob = build_problem(&yk, &x, &wlasso::covariance::PrecisionFactor::identity(1)).unwrap();
        let single = solve_lasso(&prob, 1.5, &[0.0, 0.0], &cfg).unwrap();
        for r_ in 0..2 {
            let row = rows.iter().find(|row| row.k == k && row.r == r_).unwrap();
            assert_eq!(row.j, k * 2 + r_);
            assert_eq!((row.lambda_index, row.lambda), (0, 1.5));
            assert!((row.beta - single.beta[r_]).abs() < 1e-8, "{} vs {}", row.beta, single.beta[r_]);
        }
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn fit_recovers_a_planted_support() {
    let dir = tempfile::tempdir().unwrap();
    let (n, q) = (400, 20);
    let mut r = rng(2);
    let x = gen_design(&DesignSpec::BalancedAnova2, n, &mut r).unwrap();
    let mut b = DenseMatrix::zeros(2, q);
    let truth = SupportSpec::new(vec![6, 15, 27], vec![1, -1, 1], 2 * q).unwrap();
    for (&j, &sg) in truth.indices().iter().zip(truth.signs()) {
        b[(j % 2, j / 2)] = f64::from(sg);
    }
    let e = gen_noise(&CovarianceModel::ar1(0.5, 1.0, q).unwrap(), n, &mut r).unwrap();
    let y = x.matmul(&b).unwrap().add(&e).unwrap();
    write_matrix(&dir.path().join("y.csv"), &y);
    write_matrix(&dir.path().join("x.csv"), &x);
    let out = dir.path().join("out");
    ok(&wlasso(&["--out-dir", s(&out), "fit", s(&dir.path().join("y.csv")), s(&dir.path().join("x.csv"))]));

    let support: Vec<SupportRow> = read_rows(&out.join("support.csv"));
    let n_lambda = 100;
    let recovered = (0..n_lambda).any(|li| {
        let rows: Vec<&SupportRow> = support.iter().filter(|s| s.lambda_index == li).collect();
        rows.len() == truth.len()
            && rows.iter().zip(truth.indices().iter().zip(truth.signs())).all(|(row, (&j, &sg))| row.j == j && row.sign == sg)
    });
    assert!(recovered);
    let cov: Value = serde_json::from_str(&fs::read_to_string(out.join("covariance.json")).unwrap()).unwrap();
    let phi = cov["coefficients"][0].as_f64().unwrap();
    assert!((phi - 0.5).abs() < 0.05, "{phi}");
}

#[test]
fn malformed_csv_exits_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("y.csv"), "a,b\n1,2\n3,oops\n4,5\n").unwrap();
    fs::write(dir.path().join("x.csv"), "a\n1\n1\n1\n").unwrap();
    let out = wlasso(&["--out-dir", s(dir.path()), "fit", s(&dir.path().join("y.csv")), s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn fit_rejects_too_many_predictors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("y.csv"), "a\n1\n2\n").unwrap();
    fs::write(dir.path().join("x.csv"), "a,b\n1,0\n0,1\n").unwrap();
    let out = wlasso(&["--out-dir", s(dir.path()), "fit", s(&dir.path().join("y.csv")), s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_smoke_writes_long_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("out");
    ok(&wlasso(&["--out-dir", s(&out), "--threads", "2", "simulate", s(&cfg)]));
    let text = fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    let freq = fs::read_to_string(out.join("frequencies.csv")).unwrap();
    assert_eq!(freq.lines().count(), 1 + 3);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["seed"], 5);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["replicates.csv", "frequencies.csv", "manifest.json"]);
}

#[test]
fn replicate_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = smoke_config(dir.path());
    let out = dir.path().join("out");
    ok(&wlasso(&["--out-dir", s(&out), "simulate", s(&cfg_path)]));
    let from_disk: Vec<ReplicateRecord> = read_rows(&out.join("replicates.csv"));
    let cfg = wlasso::cli::load_config(&cfg_path).unwrap();
    assert_eq!(from_disk, run_experiment(&cfg).unwrap().records);
}

#[test]
fn simulate_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let mut tables = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        ok(&wlasso(&["--out-dir", s(&out), "--threads", threads, "simulate", s(&cfg)]));
        tables.push(fs::read(out.join("frequencies.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_wlasso"))
        .args(["--out-dir", s(&dir.path().join("o")), "simulate", s(&cfg)])
        .env("WLASSO_THREADS", "0")
        .output()
        .unwrap();
    // zero workers is rejected, proving the variable was read
    assert_eq!(out.status.code(), Some(2));
}

fn digest(dir: &Path, args: &[&str]) -> String {
    let mut full = vec!["--out-dir", s(dir)];
    full.extend_from_slice(args);
    ok(&wlasso(&full));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    manifest["config_digest"].as_str().unwrap().to_string()
}

#[test]
fn config_digest_tracks_semantic_changes_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let reordered = dir.path().join("reordered.json");
    fs::write(
        &reordered,
        r#"{"noises":[{"phi1":0.5,"kind":"ar1"}],"q_values":[10],"n_values":[20],"replicates":2,"seed":5}"#,
    )
    .unwrap();
    let base = digest(&dir.path().join("1"), &["simulate", s(&cfg)]);
    assert_eq!(base, digest(&dir.path().join("2"), &["simulate", s(&reordered)]));
    assert_eq!(base, digest(&dir.path().join("3"), &["--threads", "2", "simulate", s(&cfg)]));
    assert_ne!(base, digest(&dir.path().join("4"), &["simulate", s(&cfg), "--replicates", "1"]));
    assert_ne!(base, digest(&dir.path().join("5"), &["--seed", "6", "simulate", s(&cfg)]));
    assert_ne!(base, digest(&dir.path().join("6"), &["simulate", s(&cfg), "--n-lambda", "50"]));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seed = 1\nn_values = [21]\nq_values = [10]\n[[noises]]\nkind = \"ar1\"\nphi1 = 0.5\n").unwrap();
    assert_eq!(wlasso(&["--out-dir", s(dir.path()), "simulate", s(&path)]).status.code(), Some(2));
    fs::write(&path, "seed = 1\nunknown = 3\n").unwrap();
    assert_eq!(wlasso(&["--out-dir", s(dir.path()), "simulate", s(&path)]).status.code(), Some(2));
}

fn audit(dir: &Path, truth: &str, extra: &[&str]) -> (Output, Option<Value>) {
    let truth_path = dir.join("truth.csv");
    fs::write(&truth_path, truth).unwrap();
    let out_dir = dir.join("audit");
    let mut args = vec!["--out-dir", s(&out_dir), "audit", "--truth", s(&truth_path)];
    args.extend_from_slice(extra);
    let out = wlasso(&args);
    let report = fs::read_to_string(out_dir.join("audit.json"))
        .ok()
        .map(|t| serde_json::from_str(&t).unwrap());
    (out, report)
}

#[test]
fn audit_identity_noise_orthonormal_design() {
    let dir = tempfile::tempdir().unwrap();
    let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
    write_matrix(&dir.path().join("x.csv"), &x);
    let (out, report) = audit(dir.path(), "j,sign\n3,1\n", &["--x", s(&dir.path().join("x.csv")), "--phi1", "0", "--q", "4"]);
    ok(&out);
    let report = report.unwrap();
    assert_eq!(report["ic"]["eta"], 1.0);
    assert_eq!(report["ar1_ic_bound"], 0.0);
}

#[test]
fn audit_ar1_balanced_design_respects_closed_form_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = audit(
        dir.path(),
        "j,sign,beta\n4,1,0.5\n9,-1,-0.5\n",
        &["--design", "balanced", "--n", "20", "--phi1", "0.5", "--q", "10"],
    );
    ok(&out);
    let report = report.unwrap();
    let max_lhs = report["ic"]["max_lhs"].as_f64().unwrap();
    assert!(max_lhs <= 0.6667, "{max_lhs}");
    assert!((report["ar1_ic_bound"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(report["ar1_placement_ok"], true);
    assert!(report["assumptions"]["min_beta_scaled"].as_f64().is_some());
}

#[test]
fn audit_reports_placement_failure_and_ic_independently() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = audit(
        dir.path(),
        "j,sign\n0,1\n",
        &["--design", "balanced", "--n", "20", "--phi1", "0.5", "--q", "10"],
    );
    ok(&out);
    let report = report.unwrap();
    assert_eq!(report["ar1_placement_ok"], false);
    assert!(report["ic"]["max_lhs"].as_f64().is_some());
}

#[test]
fn audit_reads_covariance_file() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("cov.json");
    fs::write(&cov, r#"{"kind":"arm","coefficients":[0.4,0.2],"sigma2":1.0,"dim":8}"#).unwrap();
    let (out, report) = audit(dir.path(), "j,sign\n5,1\n", &["--design", "balanced", "--n", "10", "--cov-file", s(&cov)]);
    ok(&out);
    let report = report.unwrap();
    assert!(report["ar1_ic_bound"].is_null());
    assert_eq!(report["covariance"]["dim"], 8);
}

#[test]
fn audit_singular_sub_gram_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let x = DenseMatrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [0.5, 0.5]]).unwrap();
    write_matrix(&dir.path().join("x.csv"), &x);
    let (out, _) = audit(dir.path(), "j,sign\n0,1\n1,1\n", &["--x", s(&dir.path().join("x.csv")), "--phi1", "0.3", "--q", "3"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn audit_rejects_out_of_range_support() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = audit(dir.path(), "j,sign\n40,1\n", &["--design", "balanced", "--n", "10", "--phi1", "0.5", "--q", "10"]);
    assert_eq!(out.status.code(), Some(2));
}
