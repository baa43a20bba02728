mod common;

use fman::cli::run_with;
use serde_json::Value;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["fman".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = run(args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
    (code, v)
}

#[test]
fn validate_reports_schema() {
    let (code, v) = json(&["validate", "--example", "twocomponent", "--point", "0.3,0.7"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "pass");
    let rep = &v["reports"][0];
    let keys: Vec<&str> = rep.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["check", "items", "verdict", "point", "order", "tolerance"] {
        assert!(keys.contains(&k), "missing {k} in {keys:?}");
    }
    assert!(rep["items"].as_array().unwrap().iter().all(|i| i["name"].is_string() && i["residual"].is_number()));
}

#[test]
fn failing_check_exits_two() {
    let (code, v) = json(&["metric", "--example", "twocomponent", "--affinor", "e:1"]);
    assert_eq!(code, 2);
    assert_eq!(v["verdict"], "fail");
    let (code, _) = json(&["metric", "--example", "twocomponent", "--affinor", "e:-1"]);
    assert_eq!(code, 0);
}

#[test]
fn usage_and_input_errors_exit_one() {
    assert_eq!(run(&["validate", "--example", "nosuchmodel"]).0, 1);
    assert_eq!(run(&["validate"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["validate", "--model", "/nonexistent/model.toml"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn connection_and_curvature_commands() {
    let (code, v) = json(&["connection", "--example", "twocomponent", "--point", "0.1,0.2"]);
    assert_eq!(code, 0);
    let gamma = v["christoffel"].as_array().unwrap();
    let first = gamma.iter().find(|e| e["upper"] == 1 && e["lower"] == serde_json::json!([1, 2])).unwrap();
    assert!((first["value"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    let (code, _) = json(&["curvature", "--example", "twocomponent", "--check-3rc"]);
    assert_eq!(code, 0);
    let (code, _) = json(&["curvature", "--example", "nonregular2d", "--obstruction", "--order", "3"]);
    assert_eq!(code, 0);
}

#[test]
fn symmetry_and_tsarev_commands() {
    let (code, _) = json(&["symmetry", "--example", "twocomponent", "--data", "w", "--series-order", "6"]);
    assert_eq!(code, 0);
    let (code, _) = json(&["tsarev", "--example", "twocomponent", "--symmetry", "w"]);
    assert_eq!(code, 0);
    let (code, out, _) = run(&["tsarev", "--example", "twocomponent", "--tsarev-data", "0 1;1 1", "--format", "text"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn hodograph_csv_and_out_file() {
    let grid = "0.5:1.5:21,-0.2:0.2:21";
    let (code, out, _) =
        run(&["hodograph", "--example", "twocomponent", "--symmetry", "w", "--grid", grid, "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,t,u1,u2,status,residual");
    assert_eq!(lines.len(), 442);

    let path = std::env::temp_dir().join(format!("fman-grid-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, v) = json(&["hodograph", "--example", "twocomponent", "--symmetry", "w", "--grid", grid, "--out", p]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "pass");
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written.lines().count(), 442);
    std::fs::remove_file(&path).ok();
}

#[test]
fn model_file_and_conservation() {
    let path = common::models_dir().join("twocomponent.toml");
    let (code, v) = json(&["conserve", "--model", path.to_str().unwrap(), "--point", "0.2,0.4"]);
    assert_eq!(code, 0, "{v}");
    let (code, out, _) = run(&["example-list"]);
    assert_eq!(code, 0);
    assert!(out.contains("twocomponent") && out.contains("nonregular2d"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fman");
    let ok = Command::new(bin).args(["validate", "--example", "onedim"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["validate", "--example", "missing"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}
