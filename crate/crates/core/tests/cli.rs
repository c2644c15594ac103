use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mdbt::bench::read_trace;
use mdbt::optimizers::RunStatus;

fn mdbt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdbt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn mdbt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const DIAG100: &str = "\
name = diag100
objective = quadratic
synth = diagonal
dim = 2
cond = 100
init = ones
seed = 0
max_oracle_calls = 5000
output_dir = out

[method.gd_ls]
[method.mb_ellipsoid]
";

#[test]
fn run_writes_one_trace_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DIAG100);
    let o = mdbt(&["run", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let gd = read_trace(&dir.path().join("out/gd_ls.csv")).unwrap();
    let mb = read_trace(&dir.path().join("out/mb_ellipsoid.csv")).unwrap();
    assert_eq!(gd.header_value("label"), Some("gd_ls"));
    let gd_calls = gd.calls_to_reach(1e-10).unwrap_or(u64::MAX);
    let mb_calls = mb.calls_to_reach(1e-10).expect("mb_ellipsoid reaches 1e-10");
    assert!(mb_calls < gd_calls, "mb {mb_calls} vs gd {gd_calls}");
    assert!(stdout(&o).contains("mb_ellipsoid: status="));
}

#[test]
fn oracle_prints_the_optimal_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.mat"), "0.5 0.1\n0.1 1.0\n").unwrap();
    let o = mdbt(&["oracle", "a.mat"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("p* = [")).unwrap();
    let p: Vec<f64> = line
        .trim_start_matches("p* = [")
        .trim_end_matches(']')
        .split(", ")
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((p[0] - 1.75).abs() < 0.05 && (p[1] - 0.87).abs() < 0.05, "{p:?}");
    assert!(text.contains("kappa* = "));
}

#[test]
fn oracle_rejects_an_indefinite_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.mat"), "1 2\n2 1\n").unwrap();
    let o = mdbt(&["oracle", "a.mat"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn plot_draws_one_polyline_per_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DIAG100);
    assert!(mdbt(&["run", &cfg], dir.path()).status.success());
    let o = mdbt(&["plot", "out/gd_ls.csv", "--out", "fig.svg"], dir.path());
    assert!(o.status.success());
    let svg = fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(svg.contains("total oracle calls") && svg.contains("f(x) - f*"));

    let o = mdbt(&["plot", "out/gd_ls.csv", "out/mb_ellipsoid.csv", "--out", "both.svg"], dir.path());
    assert!(o.status.success());
    let svg = fs::read_to_string(dir.path().join("both.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn ls_datasets_lists_libsvm_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.libsvm"), "+1 1:0.5 3:2\n-1 2:1\n").unwrap();
    fs::write(dir.path().join("notes.md"), "ignored").unwrap();
    let o = mdbt(&["ls-datasets", "--dir", "."], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("tiny.libsvm")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cols[1..], ["2", "3", "3", "binary"]);
    assert!(!text.contains("notes.md"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DIAG100.replace("cond = 100", "condition = 100"));
    let o = mdbt(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("condition"));

    assert_eq!(mdbt(&["run", "missing.cfg"], dir.path()).status.code(), Some(2));
    assert_eq!(mdbt(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn a_diverging_method_still_writes_its_trace() {
    let dir = tempfile::tempdir().unwrap();
    let body = DIAG100.replace("[method.gd_ls]", "[method.gdhd]\ngdhd_alpha0 = 1e3");
    let cfg = write_config(dir.path(), &body);
    let o = mdbt(&["run", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/gdhd.csv")).unwrap();
    assert!(csv.trim_end().ends_with("# status=diverged"), "{csv}");
    let t = read_trace(&dir.path().join("out/gdhd.csv")).unwrap();
    assert_eq!(t.status, Some(RunStatus::Diverged));
}
