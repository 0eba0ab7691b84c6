use std::process::{Command, Output};

fn peelkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peelkit")).args(args).env_remove("PEELKIT_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    let line = text.lines().find(|l| l.starts_with(&prefix)).unwrap_or_else(|| panic!("no {key} in\n{text}"));
    line[prefix.len()..].trim().parse().unwrap()
}

#[test]
fn analyze_quadrangulation() {
    let o = peelkit(&["analyze", "--preset", "quadrangulation"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((field(&text, "c_plus") - 8f64.sqrt()).abs() < 1e-12);
    assert!((field(&text, "L_nu") - 4.0 / 3.0).abs() < 1e-12);
    assert!(text.contains("classification=regular_critical"), "{text}");
}

#[test]
fn analyze_geometric() {
    let o = peelkit(&["analyze", "--preset", "geometric", "--H", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((field(&text, "r") - 0.6).abs() < 1e-12);
    assert!((field(&text, "L_nu") - 5.0).abs() < 1e-10);
}

#[test]
fn analyze_json_and_inline_weights() {
    let o = peelkit(&["analyze", "--weights", r#"{"4":"1/12"}"#, "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["c_plus"].as_f64().unwrap() - 8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let o = peelkit(&["analyze", "--weights", r#"{"4":"1/20"}"#, "--require-critical"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[not-critical]"), "{}", stderr(&o));

    let o = peelkit(&["analyze", "--weights", r#"{"4":"1/20"}"#]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("classification=subcritical"));

    assert_eq!(peelkit(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(peelkit(&["analyze"]).status.code(), Some(2));
    let o = peelkit(&["simulate", "--preset", "quadrangulation", "--out", "/nonexistent/dir/t.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[usage]"));
}

#[test]
fn help_lists_formula_map() {
    let o = peelkit(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Formula-to-flag map"));
    for cmd in ["analyze", "preset", "simulate", "enumerate", "scaling-test", "tune-critical"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = ["a.csv", "b.csv"].iter().map(|n| dir.path().join(n).display().to_string()).collect();
    for p in &paths {
        let o = peelkit(&[
            "simulate", "--preset", "triangulation", "--mode", "ibpm", "--steps", "5000", "--seed", "7", "--format",
            "csv", "--out", p,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed=7"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5002);

    let threads = Command::new(env!("CARGO_BIN_EXE_peelkit"))
        .args(["simulate", "--preset", "triangulation", "--steps", "5000", "--seed", "7", "--format", "csv"])
        .env("PEELKIT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(threads.stdout).unwrap(), text);
}

#[test]
fn enumerate_json() {
    let o = peelkit(&["enumerate", "--weights", r#"{"4":"1/12"}"#, "--l", "2", "--dmax", "8", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.to_string().contains("1/6"), "{v}");

    let o = peelkit(&["enumerate", "--weights", r#"{"4":"1/12"}"#, "--dmax", "500"]);
    assert_eq!(o.status.code(), Some(2));

    let o = peelkit(&["enumerate", "--weights", r#"{"3":0.25}"#, "--l", "1", "--dmax", "6"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("inexact"), "{}", stderr(&o));
}

#[test]
fn preset_and_tune() {
    let o = peelkit(&["preset", "--preset", "two-p-angulation", "--p", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("c_plus"));

    let o = peelkit(&["tune-critical", "--weights", r#"{"3":1,"4":1}"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((field(&stdout(&o), "t_star") - 0.0585330575502889).abs() < 1e-10);
}
