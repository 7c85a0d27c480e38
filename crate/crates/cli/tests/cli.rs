//! Exit-code contract and output formats of the `lpdual` binary.

use std::path::Path;
use std::process::{Command, Output};

fn lpdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpdual"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&lpdual(&[])), 2);
    assert_eq!(code(&lpdual(&["frobnicate"])), 2);
    assert_eq!(code(&lpdual(&["scan", "--p", "1:0:2"])), 2);
    assert_eq!(code(&lpdual(&["solve", "--p", "-1,-2", "--q", "2.5"])), 2);
    assert_eq!(code(&lpdual(&["polar"])), 2);
    assert_eq!(code(&lpdual(&["scan", "--q", ""])), 2);
    let o = lpdual(&["verify", "--lmax", "4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("below the minimum"));
}

#[test]
fn config_file_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"lmax": 16, "unknown_key": 1}"#).unwrap();
    assert_eq!(code(&lpdual(&["scan", "--config", path_str(&cfg)])), 2);
    std::fs::write(&cfg, r#"{"solver": {"damping": 2.0}}"#).unwrap();
    assert_eq!(code(&lpdual(&["solve", "--config", path_str(&cfg)])), 2);
    assert_eq!(
        code(&lpdual(&["solve", "--config", "/nonexistent/run.json"])),
        2
    );
}

#[test]
fn corrupted_body_reports_path_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let body = dir.path().join("body.json");
    std::fs::write(
        &body,
        "{\"lmax\": 2,\n \"coefficients\": [[0, 0, 3.5],\n [1, 0, oops]]}",
    )
    .unwrap();
    let o = lpdual(&["polar", "--body", path_str(&body), "--lmax", "8"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("body.json"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn single_cell_scan_writes_one_row_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = lpdual(&[
        "scan",
        "--p",
        "-1",
        "--q",
        "2.5",
        "--seeds",
        "0",
        "--lmax",
        "12",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "p,q,seed,status,sphere_distance,iterations,lambda_2,residual"
    );
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("-1.0,2.5,0,ConvergedSphere,"));
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("scan.csv.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["lmax"], 12);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["p"], serde_json::json!([-1.0]));
    assert!(meta["tolerances"]["solver_residual"].is_number());
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let o = lpdual(&[
        "scan",
        "--p",
        "-2:1:-1",
        "--q",
        "2.25",
        "--seeds",
        "4",
        "--lmax",
        "10",
        "--out",
        path_str(&first),
    ]);
    assert_eq!(code(&o), 0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap())
            .unwrap();
    let cfg = dir.path().join("echo.json");
    let mut echoed = meta["config"].clone();
    echoed["out"] = serde_json::Value::Null;
    std::fs::write(&cfg, echoed.to_string()).unwrap();
    let second = dir.path().join("b.csv");
    let o = lpdual(&[
        "scan",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&second),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn out_of_region_cells_do_not_gate_the_exit_code() {
    let o = lpdual(&[
        "scan", "--p", "0", "--q", "7", "--seeds", "0", "--lmax", "10",
    ]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0.0,7.0,0,"));
}

#[test]
fn solve_then_polar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let o = lpdual(&[
        "solve",
        "--p",
        "-1",
        "--q",
        "2.5",
        "--lmax",
        "12",
        "--out",
        path_str(&sol),
    ]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(doc["status"], "ConvergedSphere");
    assert_eq!(
        doc["final_h"]["coefficients"].as_array().unwrap().len(),
        169
    );

    let pol = dir.path().join("polar.json");
    let o = lpdual(&[
        "polar",
        "--body",
        path_str(&sol),
        "--p",
        "-1",
        "--q",
        "2.5",
        "--lmax",
        "12",
        "--out",
        path_str(&pol),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&pol).unwrap()).unwrap();
    assert_eq!(doc["mapped_p"], -2.5);
    assert_eq!(doc["mapped_q"], 1.0);
    assert!(doc["mapped_residual"].as_f64().unwrap() <= 1e-5);

    // the polar body document loads back
    let body = dir.path().join("body.json");
    std::fs::write(&body, doc["body"].to_string()).unwrap();
    let o = lpdual(&["polar", "--body", path_str(&body), "--lmax", "12"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn spectrum_reports_each_pair() {
    let o = lpdual(&["spectrum", "--p", "-1,0", "--q", "2.5", "--lmax", "3"]);
    assert_eq!(code(&o), 0);
    let reports: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["closed_form"][2], -2.5);
    assert!(reports[1]["max_abs_gap"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn verify_small_campaign_with_imported_body() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let o = lpdual(&[
        "solve",
        "--p",
        "-2",
        "--q",
        "2",
        "--lmax",
        "12",
        "--out",
        path_str(&sol),
    ]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let body = dir.path().join("body.json");
    std::fs::write(&body, doc["final_h"].to_string()).unwrap();

    let cfg = dir.path().join("verify.json");
    std::fs::write(
        &cfg,
        r#"{"verify": {"seeds": [0, 1], "fields_per_body": 2, "spectrum_pairs": [[-1.0, 2.5]], "spectrum_lmax": 3}}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let o = lpdual(&[
        "verify",
        "--config",
        path_str(&cfg),
        "--lmax",
        "32",
        "--body",
        path_str(&body),
        "--out",
        path_str(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    for key in [
        "check_name",
        "body_id",
        "lmax",
        "residual_or_deficit",
        "tolerance",
        "pass",
    ] {
        assert!(recs.iter().all(|r| r.get(key).is_some()), "{key}");
    }
    assert!(recs
        .iter()
        .any(|r| r["body_id"].as_str().unwrap().starts_with("file:")));
    let mut families: Vec<&str> = recs
        .iter()
        .map(|r| r["check_name"].as_str().unwrap().split('[').next().unwrap())
        .collect();
    families.sort();
    families.dedup();
    assert!(families.len() >= 9, "{families:?}");

    // an impossible tolerance turns into exit 1
    std::fs::write(
        &cfg,
        r#"{"verify": {"seeds": [0], "fields_per_body": 1, "polar": false, "spectrum_pairs": [], "tolerances": {"main_identity": 0.0}}}"#,
    )
    .unwrap();
    let o = lpdual(&["verify", "--config", path_str(&cfg), "--lmax", "12"]);
    assert_eq!(code(&o), 1);
}
