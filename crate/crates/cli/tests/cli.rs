use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn abelcheck(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_abelcheck"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_GRID: &str = r#""grid": {"psi_nodes": 8, "r2_nodes": 6, "r2_min": 0.01, "r2_max": 100.0}"#;

#[test]
fn plummer_check_to_stdout() {
    let out = abelcheck(&["check", "--nodes", "128"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["status"], "all_satisfied");
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        &format!(r#"{{"schema_version": 1, "model": {{"kind": "separable-expr", "a": "Psi*(1-Psi)"}}, {SMALL_GRID}}}"#),
    );
    let out = abelcheck(&["check", "--config", &bad, "--format", "csv"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("first violation"));

    let biv = write_config(
        dir.path(),
        "biv.json",
        &format!(r#"{{"schema_version": 1, "model": {{"kind": "bivariate-expr", "p": "r2^(-0.75)*Psi^4"}}, {SMALL_GRID}}}"#),
    );
    assert_eq!(abelcheck(&["check", "--config", &biv], None).status.code(), Some(3));
    // not isotropic
    assert_eq!(abelcheck(&["invert", "--config", &biv], None).status.code(), Some(1));
}

#[test]
fn execution_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = abelcheck(&["check", "--config", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());

    let syntax = write_config(
        dir.path(),
        "syntax.json",
        r#"{"schema_version": 1, "model": {"kind": "bivariate-expr", "p": "log(Psi"}}"#,
    );
    let out = abelcheck(&["check", "--config", &syntax], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"schema_version": 1, "model": {"kind": "bivariate-expr", "p": "Psi*q"}}"#,
    );
    let out = abelcheck(&["check", "--config", &unknown], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r2"));
}

#[test]
fn writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let cfg = write_config(
        dir.path(),
        "p.json",
        &format!(r#"{{"schema_version": 1, "model": {{"kind": "builtin", "name": "plummer"}}, {SMALL_GRID}}}"#),
    );
    for format in ["json", "csv", "text"] {
        let out = abelcheck(
            &["transform", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--format", format],
            None,
        );
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["transform.csv", "transform.json", "transform.txt"]);
    let csv = fs::read_to_string(out_dir.join("transform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 * 6);
}

#[test]
fn invert_plummer() {
    let out = abelcheck(&["invert", "--format", "csv", "--nodes", "128"], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("energy,f"));
    assert_eq!(csv.lines().count(), 129);
}

#[test]
fn validate_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"schema_version": 1, "model": {"kind": "builtin", "name": "plummer"},
            "grid": {"psi_nodes": 6, "r2_nodes": 6}}"#,
    );
    let one = abelcheck(&["validate", "--config", &cfg], Some(1));
    let eight = abelcheck(&["validate", "--config", &cfg], Some(8));
    let again = abelcheck(&["validate", "--config", &cfg], Some(8));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, eight.stdout);
    assert_eq!(eight.stdout, again.stdout);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = abelcheck::ModelConfig::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
        cfg.build_model().unwrap();
        cfg.build_grid().unwrap();
        seen += 1;
    }
    assert!(seen >= 4);
}
