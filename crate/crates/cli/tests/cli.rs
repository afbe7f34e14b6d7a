use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpc")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn summary_value(path: &Path, key: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
        .to_string()
}

#[test]
fn preset_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpc(&["--preset", "fig_ok1", "--n", "300", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["profiles.csv", "fscan.csv", "summary.txt"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with('#'), "{name} lacks a provenance line");
    }
    assert_eq!(summary_value(&dir.path().join("summary.txt"), "monotone"), "true");
}

#[test]
fn preset_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(fpc(&["--preset", "fig_bad2", "--n", "300", "--out", &out_arg(d.path())]).status.success());
    }
    for name in ["profiles.csv", "fscan.csv", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "potential=quadratic:2\nkernel=gauss0:1e-3\nsource=indicator:0.3:0.5\nbogus=1\n").unwrap();
    let o = fpc(&["solve", "--config", cfg.to_str().unwrap(), "--mu", "1", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus"), "{err}");
    assert!(err.contains('4'), "line number missing: {err}");
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(fpc(&["frobnicate", "--preset", "fig_ok1"]).status.code(), Some(2));
}

#[test]
fn config_without_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "potential=quadratic:2\nkernel=gauss0:1e-3\nsource=indicator:0.3:0.5\n").unwrap();
    let o = fpc(&["--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invert_zero_target_returns_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpc(&["invert", "--preset", "fig_ok1", "--n", "200", "--ell", "0", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mu: f64 = summary_value(&dir.path().join("inversion.txt"), "mu_found").parse().unwrap();
    assert_eq!(mu, 0.0);
}

#[test]
fn invert_without_bracket_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpc(&[
        "invert", "--preset", "fig_bad", "--n", "200", "--ell", "1e9", "--mu-max", "1e3", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(summary_value(&dir.path().join("inversion.txt"), "status"), "no_bracket");
}

#[test]
fn solve_dumps_solution_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpc(&["solve", "--preset", "fig_ok1", "--n", "50", "--mu", "5", "--dump-solution", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,u,psi,uprime");
    assert_eq!(rows.len(), 1 + 51);
    assert!(rows[51].starts_with("1"));
}

#[test]
fn dump_system_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("system.csv");
    let o = fpc(&[
        "solve", "--preset", "fig_ok1", "--n", "20", "--mu", "2", "--dump-system", path.to_str().unwrap(), "--out",
        &out_arg(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::metadata(&path).unwrap().len() > 0);
}
