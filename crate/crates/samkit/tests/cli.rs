//! End-to-end tests of the samkit binary against the shipped data files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn samkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn validate_macro_table_exits_zero_with_json_report() {
    let out = samkit(&[
        "validate",
        "--sam",
        &data("malaysia_macro_2000.csv"),
        "--registry",
        &data("malaysia_macro_registry.csv"),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("stdout is JSON");
    for key in ["census", "balance_residuals", "structural_violations", "sign_violations"] {
        assert!(report.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(report["census"]["canonical_macro"], serde_json::json!(true));
    assert_eq!(report["sign_violations"].as_array().unwrap().len(), 0);
}

#[test]
fn validate_rejects_sign_violation_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let registry = "prod,Production,production_sector,\nhh,Households,household,\n";
    let table = ",prod,hh\nprod,,-5\nhh,5,\n";
    let reg_path = dir.path().join("reg.csv");
    let sam_path = dir.path().join("sam.csv");
    std::fs::write(&reg_path, registry).unwrap();
    std::fs::write(&sam_path, table).unwrap();
    let out = samkit(&[
        "validate",
        "--sam",
        sam_path.to_str().unwrap(),
        "--registry",
        reg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_error_exits_two() {
    let out = samkit(&["validate", "--sam", "only-half-the-flags.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn aggregate_micro_to_macro_preserves_grand_total() {
    let out = samkit(&[
        "aggregate",
        "--sam",
        &data("malaysia_micro_2000_balanced.csv"),
        "--registry",
        &data("malaysia_micro_registry.csv"),
        "--mapping",
        &data("malaysia_micro_to_macro.csv"),
        "--macro-registry",
        &data("malaysia_macro_registry.csv"),
        "--unit-factor",
        "0.001",
        "--unit",
        "RM billion",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("RM billion,production,"));
    // Household control total appears as the households row total.
    let households = text
        .lines()
        .find(|l| l.starts_with("households,"))
        .expect("households row");
    let total: f64 = households.split(',').next_back().unwrap().parse().unwrap();
    assert!((total - 188.018).abs() < 0.01, "household total {total}");
}

#[test]
fn balance_self_reconciles_the_macro_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = samkit(&[
        "balance",
        "--sam",
        &data("malaysia_macro_2000.csv"),
        "--registry",
        &data("malaysia_macro_registry.csv"),
        "--tol-balance",
        "1e-9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let balanced_path = dir.path().join("balanced.csv");
    assert!(balanced_path.exists());
    assert!(dir.path().join("balance_diagnostics.json").exists());

    // Reparse and verify every account balances to the requested tolerance.
    let text = std::fs::read_to_string(balanced_path).unwrap();
    let registry = std::sync::Arc::new(
        samkit::parse_registry(&std::fs::read_to_string(data("malaysia_macro_registry.csv")).unwrap())
            .unwrap(),
    );
    let sam = samkit::parse_sam(&text, &registry).unwrap();
    assert!(sam.is_balanced(1e-6));
    // The frozen negative cells survive with their printed values.
    assert_eq!(
        sam.cell_by_id(&"row_capital".into(), &"row_current".into()).unwrap(),
        -32.274
    );
}

#[test]
fn simulate_writes_incidence_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = samkit(&[
        "simulate",
        "--sam",
        &data("malaysia_micro_2000_balanced.csv"),
        "--registry",
        &data("malaysia_micro_registry.csv"),
        "--scenario",
        &data("scenario_household_transfers.json"),
        "--weights",
        &data("household_weights_equal.csv"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["households"].as_array().unwrap().len(), 9);
    assert_eq!(report["metrics"]["equal_weights_assumed"], serde_json::json!(false));

    let csv = std::fs::read_to_string(dir.path().join("incidence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("group,base,delta,pct"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn compare_csv_has_all_fourteen_programmes() {
    let out = samkit(&[
        "compare",
        "--sam",
        &data("malaysia_micro_2000_balanced.csv"),
        "--registry",
        &data("malaysia_micro_registry.csv"),
        "--amount",
        "100",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 15, "header plus 14 programmes");
    assert!(text.lines().any(|l| l.contains("pubexp_household_transfers")));
    assert!(text.lines().any(|l| l.contains("pubinv_transport")));
}

#[test]
fn multipliers_report_carries_labeled_matrices() {
    let out = samkit(&[
        "multipliers",
        "--sam",
        &data("malaysia_micro_2000_balanced.csv"),
        "--registry",
        &data("malaysia_micro_registry.csv"),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["accounts"].as_array().unwrap().len(), 29);
    assert_eq!(report["multiplier"]["rows"].as_array().unwrap().len(), 29);
    assert_eq!(report["blocks"]["activities"], serde_json::json!(18));
}

#[test]
fn report_emits_summary_and_chart_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = samkit(&[
        "report",
        "--sam",
        &data("malaysia_micro_2000_balanced.csv"),
        "--registry",
        &data("malaysia_micro_registry.csv"),
        "--scenario",
        &data("scenario_household_transfers.json"),
        "--amount",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for artifact in [
        "summary.txt",
        "programme_ranking.csv",
        "leakage_shares.csv",
        "incidence_by_group.csv",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("programme comparison"));
    assert!(summary.contains("gini before"));
}

#[test]
fn no_subcommand_mutates_its_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let sam_src = std::fs::read_to_string(data("malaysia_macro_2000.csv")).unwrap();
    let reg_src = std::fs::read_to_string(data("malaysia_macro_registry.csv")).unwrap();
    let sam_path: PathBuf = dir.path().join("sam.csv");
    let reg_path: PathBuf = dir.path().join("reg.csv");
    std::fs::write(&sam_path, &sam_src).unwrap();
    std::fs::write(&reg_path, &reg_src).unwrap();
    let out_dir = dir.path().join("out");
    for args in [
        vec!["validate"],
        vec!["balance", "--tol-balance", "1e-6"],
        vec!["multipliers", "--tol-balance", "0.2"],
    ] {
        let mut full = args.clone();
        full.extend_from_slice(&[
            "--sam",
            sam_path.to_str().unwrap(),
            "--registry",
            reg_path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        let _ = samkit(&full);
        assert_eq!(std::fs::read_to_string(&sam_path).unwrap(), sam_src);
        assert_eq!(std::fs::read_to_string(&reg_path).unwrap(), reg_src);
    }
}
