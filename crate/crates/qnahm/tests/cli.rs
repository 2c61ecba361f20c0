//! End-to-end tests for the qnahm binary: every subcommand is exercised
//! through the real executable, pinning exact stdout bytes and the
//! 0/1/2 exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qseries::{parse_rat, theta_psi};

fn qnahm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnahm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).expect("fixture written");
}

const RR_TRIPLE: &str = r#"{"A":[["2"]],"B":["0"],"C":"0"}"#;

const SEPARABLE_B1: &str = r#"{
  "A": [["1","0","0","-1/2"],["0","1","0","-1/2"],["0","0","1","-1/2"],["-1/2","-1/2","-1/2","1"]],
  "B": ["0","1/2","1/2","-1/2"],
  "C": "1/16"
}"#;

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

#[test]
fn expand_pins_the_classic_single_sum() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rr.json");
    write(&input, RR_TRIPLE);

    let out = qnahm(&["expand", input.to_str().unwrap(), "--order", "6"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "1 + q + q^2 + q^3 + 2q^4 + 2q^5 + 3q^6\n");

    let out = qnahm(&["expand", input.to_str().unwrap(), "--order", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn expand_json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rr.json");
    write(&input, RR_TRIPLE);

    let out = qnahm(&["expand", input.to_str().unwrap(), "--order", "8", "--json"]);
    assert_eq!(code(&out), 0);
    let series = qseries::QExp::from_json_str(stdout(&out).trim()).expect("valid series JSON");
    assert_eq!(series.coeff(&parse_rat("8").unwrap()), Some(parse_rat("4").unwrap()));
}

#[test]
fn expand_rejects_bad_input_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    let indefinite = dir.path().join("indefinite.json");
    write(&indefinite, r#"{"A":[["1","2"],["2","1"]],"B":["0","0"],"C":"0"}"#);
    let out = qnahm(&["expand", indefinite.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("positive definite"));

    let garbage = dir.path().join("garbage.json");
    write(&garbage, "not json at all");
    let out = qnahm(&["expand", garbage.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let out = qnahm(&["expand", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

// ---------------------------------------------------------------------------
// dual
// ---------------------------------------------------------------------------

#[test]
fn dual_prints_frozen_values_and_involutes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("b1.json");
    write(&input, SEPARABLE_B1);

    let out = qnahm(&["dual", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let dual: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("JSON dual");
    assert_eq!(dual["C"], "1/48");
    assert_eq!(dual["B"], serde_json::json!(["0", "1/2", "1/2", "0"]));
    assert_eq!(dual["A"][3], serde_json::json!(["2", "2", "2", "4"]));

    // The printed dual is itself valid input; dualizing again restores
    // the original data exactly.
    let round = dir.path().join("dual.json");
    write(&round, &stdout(&out));
    let back = qnahm(&["dual", round.to_str().unwrap()]);
    assert_eq!(code(&back), 0);
    let restored: serde_json::Value = serde_json::from_str(&stdout(&back)).unwrap();
    let original: serde_json::Value = serde_json::from_str(SEPARABLE_B1).unwrap();
    assert_eq!(restored, original);
}

#[test]
fn dual_check_reports_product_fits() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("b1.json");
    write(&input, SEPARABLE_B1);

    let out = qnahm(&["dual", input.to_str().unwrap(), "--check", "20"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    let primal = lines.iter().find(|l| l.starts_with("primal:")).expect("primal line");
    let dual = lines.iter().find(|l| l.starts_with("dual:")).expect("dual line");
    assert!(primal.contains("{1/2:-3, 1:3}, weight 0"), "got: {primal}");
    assert!(dual.contains("not a single eta quotient"), "got: {dual}");
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

#[test]
fn catalog_filter_runs_three_records() {
    let out = qnahm(&["catalog", "--filter", "thm-id"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert!(text.ends_with("3 records: 3 passed, 0 expected failures, 0 failed\n"));
}

#[test]
fn catalog_full_run_is_green_and_deterministic() {
    let first = qnahm(&["catalog", "--parallel", "2"]);
    assert_eq!(code(&first), 0);
    let text = stdout(&first);
    assert!(text.contains("XFAIL dual-b0-probe"));
    assert!(!text.contains("\nFAIL"));

    let second = qnahm(&["catalog", "--parallel", "4"]);
    assert_eq!(first.stdout, second.stdout, "output must not depend on worker count");
}

#[test]
fn catalog_loads_records_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cat.json");

    // A one-record catalog exported from the built-ins.
    let records: Vec<_> = qseries::builtin_catalog()
        .into_iter()
        .filter(|r| r.name == "rr-1")
        .collect();
    write(&path, &qseries::catalog_to_json(&records));

    let out = qnahm(&["catalog", "--path", path.to_str().unwrap(), "--order", "15"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("PASS  rr-1\n"));

    let bad = dir.path().join("bad.json");
    write(&bad, "[{\"name\": 3}]");
    let out = qnahm(&["catalog", "--path", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

// ---------------------------------------------------------------------------
// bailey
// ---------------------------------------------------------------------------

#[test]
fn bailey_verifies_the_defining_relation() {
    let out = qnahm(&["bailey", "--pair", "bp1", "--nmax", "12", "--order", "25"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "PASS\n");
}

#[test]
fn bailey_transform_prints_both_sides_then_verdict() {
    let out = qnahm(&[
        "bailey", "--pair", "bp1", "--scale", "2", "--transform", "tbl", "--order", "25",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("lhs: 1 + 4q + 4q^2"));
    assert!(lines[0].ends_with("..."));
    assert_eq!(lines[2], "EQUAL");
}

#[test]
fn bailey_guards_transform_requirements() {
    // tbl needs base q^2; the default scale is 1.
    let out = qnahm(&["bailey", "--pair", "bp1", "--transform", "tbl"]);
    assert_eq!(code(&out), 2);

    // s2bl needs a pair relative to q; bp1 is relative to 1.
    let out = qnahm(&["bailey", "--pair", "bp1", "--transform", "s2bl"]);
    assert_eq!(code(&out), 2);

    let out = qnahm(&["bailey", "--pair", "bp9"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bp9"));
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[test]
fn fit_recognizes_a_series_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.json");
    write(&path, &theta_psi(&parse_rat("30").unwrap()).to_json_string());

    let out = qnahm(&["fit", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "{1:-1, 2:2}, weight 1/2\n");
}

#[test]
fn fit_evaluates_inline_expressions() {
    let out = qnahm(&["fit", "--expr", r#"{"kind":"theta","form":"psi"}"#, "--order", "25"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "{1:-1, 2:2}, weight 1/2\n");

    // A corrupted series is a mathematical mismatch, exit 1.
    let out = qnahm(&[
        "fit",
        "--expr",
        r#"{"kind":"add","parts":[{"kind":"theta","form":"psi"},{"kind":"q_pow","exp":"17"}]}"#,
        "--order",
        "25",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("first residual exponent 17"));
}

#[test]
fn fit_requires_exactly_one_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.json");
    write(&path, &theta_psi(&parse_rat("10").unwrap()).to_json_string());

    let out = qnahm(&["fit"]);
    assert_eq!(code(&out), 2);

    let out = qnahm(&[
        "fit",
        path.to_str().unwrap(),
        "--expr",
        r#"{"kind":"theta","form":"psi"}"#,
    ]);
    assert_eq!(code(&out), 2);
}

// ---------------------------------------------------------------------------
// global contract
// ---------------------------------------------------------------------------

#[test]
fn usage_errors_exit_two() {
    let out = qnahm(&[]);
    assert_eq!(code(&out), 2);

    let out = qnahm(&["frobnicate"]);
    assert_eq!(code(&out), 2);

    let out = qnahm(&["expand"]);
    assert_eq!(code(&out), 2);
}
