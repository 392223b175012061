use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equimetric"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn circle_cover_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "circle", "n": 12, "k": 3}, "mode": "cover"}"#);
    let out = dir.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["rho.csv", "quotient.csv", "slices.txt", "report.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rho = std::fs::read_to_string(out.join("rho.csv")).unwrap();
    assert!(rho.lines().nth(1).unwrap().contains(",2.0943951,"));
}

#[test]
fn mode_override_changes_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "circle", "n": 12, "k": 3}, "mode": "cover"}"#);
    assert_eq!(run(&cfg, &dir.path().join("a"), &["--mode", "naive"]).status.code(), Some(2));
    assert_eq!(run(&cfg, &dir.path().join("b"), &["--mode", "general"]).status.code(), Some(0));
}

#[test]
fn disconnected_cover_is_advisory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "reflection", "m": 2, "h": 1.0}, "mode": "cover"}"#);
    assert_eq!(run(&cfg, &dir.path().join("o"), &[]).status.code(), Some(3));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "circle", "n": 12, "k": 5}, "mode": "cover"}"#);
    assert_eq!(run(&cfg, &dir.path().join("o"), &[]).status.code(), Some(1));
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "circle", "n": 12, "k": 3}, "mode": "cover", "bogus": 1}"#);
    assert_eq!(run(&cfg, &dir.path().join("o"), &[]).status.code(), Some(1));
    assert_eq!(run(&cfg, &dir.path().join("o"), &["--scale", "-1"]).status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
}

#[test]
fn generated_file_runs_like_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("circle.json");
    let gen = bin().args(["gen", "--scenario", "circle", "--n", "12", "--k", "3", "--out"]).arg(&file).output().unwrap();
    assert!(gen.status.success());
    let from_file = write_config(dir.path(), r#"{"scenario": {"name": "file", "path": "circle.json"}, "mode": "cover"}"#);
    assert_eq!(run(&from_file, &dir.path().join("f"), &[]).status.code(), Some(0));
    let builtin = dir.path().join("builtin.json");
    std::fs::write(&builtin, r#"{"scenario": {"name": "circle", "n": 12, "k": 3}, "mode": "cover"}"#).unwrap();
    assert_eq!(run(&builtin, &dir.path().join("b"), &[]).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("f/rho.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/rho.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_only_filters_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"name": "circle", "n": 12, "k": 3}, "mode": "naive"}"#);
    let res = bin().arg("verify").arg("--config").arg(&cfg).args(["--only", "lift.invariance"]).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.lines().filter(|l| !l.starts_with('#')).all(|l| l.starts_with("lift.invariance")));
    let res = bin().arg("verify").arg("--config").arg(&cfg).args(["--only", "lift.local-isometry"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    let res = bin().arg("verify").arg("--config").arg(&cfg).args(["--only", "nothing"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}
