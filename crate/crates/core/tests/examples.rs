//! Runs every example binary that `cargo test` builds alongside the tests.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    deps.parent().unwrap().join("examples").join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str, args: &[&str]) -> String {
    let bin = example(name);
    assert!(bin.exists(), "{} not built", bin.display());
    let out = Command::new(&bin).args(args).output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn quickstart() {
    let out = run("quickstart", &[]);
    assert!(out.contains("mb_ellipsoid") && out.contains("converged"));
}

#[test]
fn optimal_preconditioner() {
    let out = run("optimal_preconditioner", &[]);
    assert!(out.contains("p*     = [1.75"));
}

#[test]
fn logistic_regression() {
    assert!(run("logistic_regression", &[]).contains("toy_classification"));
}

#[test]
fn baselines() {
    assert!(run("baselines", &[]).contains("rprop"));
}

#[test]
fn cutting_planes() {
    assert!(run("cutting_planes", &[]).contains(" cuts, "));
}

#[test]
fn experiment_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/diag100.cfg");
    run("experiment_and_plot", &[cfg, dir.path().to_str().unwrap()]);
    assert!(dir.path().join("diag100.svg").exists());
    assert!(dir.path().join("mb_ellipsoid.csv").exists());
}
