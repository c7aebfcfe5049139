//! End-to-end tests of the `provalue` binary: exit codes, output formats,
//! and round-trips through the library's own readers.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn provalue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_provalue"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn parse_vec(text: &str) -> Vec<f64> {
    serde_json::from_str(text.trim()).expect("valid JSON array")
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = provalue(&[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "stderr: {err}");
}

#[test]
fn unknown_flags_are_rejected() {
    let out = provalue(&["weights", "--family", "shapley", "--n", "3", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = provalue(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Usage"));
}

#[test]
fn weights_prints_the_documented_vector() {
    let out = provalue(&["weights", "--family", "shapley", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        "[0.3333333333, 0.1666666667, 0.3333333333]"
    );

    let out = provalue(&["weights", "--family", "beta:0.5,1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn weights_survive_large_player_counts() {
    // Mid-range Banzhaf weights at n = 101 are ~8e-31; the output must keep
    // them rather than rounding to zero.
    let out = provalue(&["weights", "--family", "banzhaf", "--n", "101"]);
    assert_eq!(out.status.code(), Some(0));
    let p = parse_vec(&stdout(&out));
    assert_eq!(p.len(), 101);
    let expected = 2f64.powi(-100);
    for v in p {
        assert!((v - expected).abs() / expected < 1e-9, "{v} vs {expected}");
    }
}

#[test]
fn exact_on_the_stump_fixture() {
    let out = provalue(&[
        "exact",
        "--game",
        &fixture("stump.json"),
        "--weights",
        "banzhaf",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let phi = parse_vec(&stdout(&out));
    let want = [0.8, 0.0, 0.0, 0.0, 0.0];
    for (a, b) in phi.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }

    let out = provalue(&[
        "exact",
        "--game",
        &fixture("two_player.json"),
        "--weights",
        "shapley",
    ]);
    let phi = parse_vec(&stdout(&out));
    assert!((phi[0] - 1.5).abs() < 1e-12 && (phi[1] - 2.5).abs() < 1e-12);
}

#[test]
fn exact_with_missing_file_is_a_runtime_error() {
    let out = provalue(&[
        "exact",
        "--game",
        "/nonexistent.json",
        "--weights",
        "shapley",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_writes_a_parseable_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let report_path: PathBuf = dir.path().join("report.json");
    let args = [
        "estimate",
        "--game",
        &fixture("forest.json"),
        "--weights",
        "wbanzhaf:0.7",
        "--estimator",
        "tree_msr",
        "--budget",
        "40n",
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        report_path.to_str().unwrap(),
    ];
    let out = provalue(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: provalue_core::EstimateReport =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.estimates.len(), 5);
    assert!(report.evaluations_used <= 200);
    assert_eq!(report.seed, 1);

    let again = provalue(&args);
    assert_eq!(again.status.code(), Some(0));
    let report2: provalue_core::EstimateReport =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.estimates, report2.estimates);

    let out = provalue(&[
        "estimate",
        "--game",
        &fixture("forest.json"),
        "--weights",
        "shapley",
        "--estimator",
        "unknown",
        "--budget",
        "8n",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kernel_estimators_need_shapley_weights_at_runtime() {
    let out = provalue(&[
        "estimate",
        "--game",
        &fixture("forest.json"),
        "--weights",
        "banzhaf",
        "--estimator",
        "kernel_shap",
        "--budget",
        "10n",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_emits_csv_the_harness_can_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bench.json");
    let csv_path = dir.path().join("results.csv");
    std::fs::write(
        &config_path,
        format!(
            r#"{{
                "master_seed": 3,
                "games": [
                    {{"id": "forest_fixture", "path": {:?}}},
                    {{"id": "rand", "random": {{"kind": "linear", "n": 4, "seed": 8}}}}
                ],
                "families": ["shapley", "beta:2,2"],
                "estimators": [{{"name": "msr"}}, {{"name": "permutation"}}],
                "budgets": ["6n"],
                "runs": 2
            }}"#,
            fixture("forest.json"),
        ),
    )
    .unwrap();
    let out = provalue(&[
        "bench",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let records = provalue_core::harness::read_records(&csv_path).unwrap();
    // 2 games x 2 families x 2 estimators x 1 budget x 1 sigma x 2 runs.
    assert_eq!(records.len(), 16);
    assert!(records
        .iter()
        .all(|r| r.error.is_finite() && r.evals <= r.m));

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("game,family,estimator,m,sigma,run,error,evals,wall_ms"));

    // No output path anywhere is a usage error.
    let out = provalue(&["bench", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_passes_on_bundled_fixtures() {
    let out = provalue(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("all fixture checks passed"));
    assert!(!text.contains("FAIL"));
}
