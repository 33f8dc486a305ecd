use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pentalab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn families_report_closed_form_centralization() {
    let out = run(&["families", "short-diagonal", "--d", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["centralized"], true);
    assert_eq!(v["chi"]["groups"][1], serde_json::json!([-2.0, 0.0, 2.0]));

    let v = json(&run(&["families", "dual-dented", "--d", "3", "--s", "1", "--shift", "auto"]));
    assert!((v["family"]["shift"].as_f64().unwrap() + 7.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["centralized"], true);
    assert_eq!(json(&run(&["families", "dual-dented", "--d", "3", "--s", "1", "--shift", "0"]))["centralized"], false);
}

#[test]
fn usage_errors_exit_2_with_a_tagged_diagnostic() {
    let out = run(&["families", "heptagonal"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error [cli::families]"), "{err}");
    let out = run(&["expand", "--eps0", "0.2", "--ratio", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("ratio"));
}

#[test]
fn dof_prints_the_bound() {
    let out = run(&["dof", "--m", "4"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "4");
}

#[test]
fn kdv_verify_passes_on_the_short_diagonal_map() {
    let out = run(&["kdv-verify", "--chi", "short-diagonal", "--d", "2", "--curve", "random", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["residual"].as_f64().unwrap() <= 1e-3);
    assert_eq!(v["curve"]["seed"], 7);
}

#[test]
fn expand_reads_a_chi_file_and_is_deterministic() {
    let path = std::env::temp_dir().join(format!("pentalab-chi-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"d": 2, "groups": [[-1.5, 0.5], [-0.5, 1.5]]}"#).unwrap();
    let args = ["expand", "--chi", path.to_str().unwrap(), "--x", "0.3", "--kmax", "3"];
    let (a, b) = (run(&args), run(&args));
    std::fs::remove_file(&path).unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["report"]["kmax"], 3);
    assert!((v["report"]["alpha"][2][2].as_f64().unwrap() - 0.375).abs() < 1e-3);
}

#[test]
fn csv_output_has_documented_columns() {
    let out = run(&["expand", "--d", "2", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("k,j,alpha,uncertainty\n"));
    let out = run(&["discretize", "--d", "2", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("eps,A_0,A_1,A_2,a_tilde_0"));
}

#[test]
fn realize34_separates_solutions_from_perturbations() {
    assert_eq!(run(&["realize34"]).status.code(), Some(0));
    assert_eq!(run(&["realize34", "--root", "2"]).status.code(), Some(0));
    let out = run(&["realize34", "--perturb", "0.05"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["report"]["sigma_equal"], false);
}

#[test]
fn centralize_agrees_with_the_dual_dented_shift() {
    let out = run(&["centralize", "--chi", "dual-dented", "--d", "3", "--s", "2", "--shift", "auto"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["numerically_centralized"], true);
    assert_eq!(v["closed_form_centralized"], true);
}
