//! Experiment suites, trace files, plots and the `mdbt` command line.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod trace_io;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dataio::{read_libsvm, Task};
use crate::error::{Error, Result};
use crate::oracle::{optimal_diag_precond, parse_dense_matrix, smoothness_l};

pub use config::{load_config, parse_config, ExperimentConfig};
pub use experiment::{run_experiment, write_results};
pub use plot::render_svg;
pub use trace_io::{read_trace, write_trace};

/// Default directory for `ls-datasets`; overridden by `--dir`.
pub const DATA_DIR_ENV: &str = "MDBT_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "mdbt", version, about = "Multidimensional backtracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every method of an experiment file and write one CSV per method.
    Run { config: PathBuf },
    /// Optimal diagonal preconditioner of a dense symmetric matrix file.
    Oracle {
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Plot suboptimality against oracle calls.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Reference value; defaults to the `f_star` header or the best value seen.
        #[arg(long)]
        f_star: Option<f64>,
    },
    /// List LIBSVM files in a directory.
    LsDatasets {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

/// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
pub fn cli_run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, out),
        Command::Oracle { matrix, tol } => cmd_oracle(&matrix, tol, out),
        Command::Plot { traces, out: svg, f_star } => cmd_plot(&traces, &svg, f_star, out),
        Command::LsDatasets { dir } => {
            let dir = dir
                .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("data"));
            cmd_ls(&dir, out)
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn cmd_run(path: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(path).map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    let results = run_experiment(&cfg)?;
    let paths = write_results(&cfg, &results)?;
    for ((label, trace), path) in results.iter().zip(paths) {
        let last = trace.events.last();
        writeln!(
            out,
            "{label}: status={} best_f={:e} calls={} -> {}",
            trace.status.map(|s| s.as_str()).unwrap_or("none"),
            trace.best_f(),
            last.map(|e| e.total_oracle_calls()).unwrap_or(0),
            path.display()
        )
        .map_err(io_out)?;
    }
    Ok(())
}

fn cmd_oracle(path: &Path, tol: f64, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let a = parse_dense_matrix(&text)?;
    let report = optimal_diag_precond(&a, tol)?;
    let p: Vec<String> = report.p_star.as_slice().iter().map(|v| format!("{v:.6}")).collect();
    writeln!(out, "p* = [{}]", p.join(", ")).map_err(io_out)?;
    writeln!(out, "kappa* = {:.6}", report.kappa_star).map_err(io_out)?;
    writeln!(out, "residual = {:e}", report.residual).map_err(io_out)?;
    writeln!(out, "method = {}", report.method).map_err(io_out)?;
    writeln!(out, "L = {:.6}", smoothness_l(&a)?).map_err(io_out)?;
    Ok(())
}

fn cmd_plot(paths: &[PathBuf], svg: &Path, f_star: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let traces = paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    let text = render_svg(&traces, f_star)?;
    fs::write(svg, text).map_err(|e| Error::io(svg, e))?;
    writeln!(out, "wrote {}", svg.display()).map_err(io_out)
}

fn cmd_ls(dir: &Path, out: &mut dyn Write) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("libsvm" | "svm" | "txt")
            )
        })
        .collect();
    entries.sort();
    writeln!(out, "{:<28} {:>8} {:>8} {:>8}  labels", "dataset", "samples", "features", "nnz")
        .map_err(io_out)?;
    for path in entries {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match read_libsvm(&path, Task::Regression) {
            Ok(ds) => {
                let binary = ds.y.iter().all(|y| [-1.0, 0.0, 1.0].contains(y));
                writeln!(
                    out,
                    "{name:<28} {:>8} {:>8} {:>8}  {}",
                    ds.n_samples(),
                    ds.n_features(),
                    ds.x.nnz(),
                    if binary { "binary" } else { "real" }
                )
                .map_err(io_out)?;
            }
            Err(e) => writeln!(out, "{name:<28} unreadable: {e}").map_err(io_out)?,
        }
    }
    writeln!(out, "synthetic: synth = diagonal | rotated (with dim, cond, seed)").map_err(io_out)
}
