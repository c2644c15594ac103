use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::dataio::{
    gaussian_vector, initialize, prepend_bias, read_libsvm, synth_quadratic, InitSpec, Task,
};
use crate::error::{Error, Result};
use crate::numkit::{dot, CsrMatrix};
use crate::objectives::{LinearRegressionL2, LogisticRegressionL2, Objective, QuadraticObjective};
use crate::optimizers::{run, RunConfig, RunStatus, RunTrace};
use crate::oracle::parse_dense_matrix;

use super::config::{ExperimentConfig, ObjectiveKind, ProblemSource, StartPoint};
use super::trace_io::write_trace;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MDBT_THREADS";

pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub x0: Vec<f64>,
    /// Exact optimum for quadratics.
    pub f_star: Option<f64>,
}

/// Solves `Ax = b` for symmetric positive definite `A` by conjugate
/// gradients, stopping at `‖r‖ ≤ tol·‖b‖` or after `10·d` iterations.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let d = b.len();
    let mut x = vec![0.0; d];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * rr;
    for _ in 0..10 * d.max(1) {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = a.spmv(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Ok(x)
}

fn quadratic_start(init: StartPoint, d: usize, seed: u64) -> Result<Vec<f64>> {
    match init {
        StartPoint::Ones => Ok(vec![1.0; d]),
        StartPoint::Zeros => Ok(vec![0.0; d]),
        StartPoint::Gaussian => Ok(gaussian_vector(d, seed)),
        StartPoint::Bias => Err(Error::Config("init = bias needs a dataset".into())),
    }
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    match &cfg.source {
        ProblemSource::Synth { .. } | ProblemSource::Matrix(_) => {
            let q = match &cfg.source {
                ProblemSource::Synth { kind, dim, cond } => synth_quadratic(*dim, *cond, *kind, cfg.seed)?,
                ProblemSource::Matrix(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    QuadraticObjective::new(parse_dense_matrix(&text)?)?
                }
                ProblemSource::Dataset { .. } => unreachable!(),
            };
            let x_star = conjugate_gradient(q.matrix(), q.linear_term(), 1e-14)?;
            let f_star = q.compute_value(&x_star);
            let x0 = quadratic_start(cfg.init, q.dim(), cfg.seed)?;
            Ok(Problem {
                objective: Box::new(q),
                x0,
                f_star: Some(f_star),
            })
        }
        ProblemSource::Dataset { path, bias } => {
            let task = match cfg.objective {
                ObjectiveKind::LogisticRegression => Task::Classification,
                _ => Task::Regression,
            };
            let mut ds = read_libsvm(path, task)?;
            if *bias {
                ds = prepend_bias(&ds);
            }
            let x0 = match cfg.init {
                StartPoint::Bias => initialize(&ds, InitSpec::Bias)?,
                StartPoint::Gaussian => initialize(&ds, InitSpec::Gaussian { seed: cfg.seed })?,
                other => quadratic_start(other, ds.n_features(), cfg.seed)?,
            };
            let objective: Box<dyn Objective> = match cfg.objective {
                ObjectiveKind::LogisticRegression => Box::new(LogisticRegressionL2::new(ds.x, ds.y)?),
                ObjectiveKind::LinearRegression => Box::new(LinearRegressionL2::new(ds.x, ds.y)?),
                ObjectiveKind::Quadratic => unreachable!("rejected by the config parser"),
            };
            Ok(Problem {
                objective,
                x0,
                f_star: None,
            })
        }
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs every method; a method that errors yields an event-free trace with
/// status `diverged` and an `error` header. `f_star` (exact for quadratics,
/// otherwise the best value seen across methods) is added to each header.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<(String, RunTrace)>> {
    let problem = build_problem(cfg)?;
    let dim = problem.objective.dim();
    let configs: Vec<(String, RunConfig)> = cfg
        .methods
        .iter()
        .map(|m| Ok((m.label.clone(), m.resolve(dim, cfg.max_oracle_calls, cfg.seed)?)))
        .collect::<Result<_>>()?;

    let one = |(label, rc): &(String, RunConfig)| -> (String, RunTrace) {
        let trace = run(problem.objective.as_ref(), &problem.x0, rc).unwrap_or_else(|e| RunTrace {
            header: {
                let mut h = rc.header();
                h.push(("error".into(), e.to_string().replace('\n', " ")));
                h
            },
            events: Vec::new(),
            status: Some(RunStatus::Diverged),
            x_final: Vec::new(),
        });
        (label.clone(), trace)
    };
    let mut results: Vec<(String, RunTrace)> = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| configs.par_iter().map(one).collect()),
        None => configs.par_iter().map(one).collect(),
    };

    let (f_star, source) = match problem.f_star {
        Some(f) => (Some(f), "exact"),
        None => (
            results
                .iter()
                .map(|(_, t)| t.best_f())
                .filter(|f| f.is_finite())
                .reduce(f64::min),
            "best_observed",
        ),
    };
    for (label, trace) in &mut results {
        let extra = [
            ("label", label.clone()),
            ("experiment", cfg.name.clone()),
            ("objective", cfg.objective.as_str().to_string()),
            ("dim", dim.to_string()),
            ("f_star", f_star.map(|f| format!("{f:?}")).unwrap_or_default()),
            ("f_star_source", source.to_string()),
        ];
        trace
            .header
            .extend(extra.into_iter().map(|(k, v)| (k.to_string(), v)));
    }
    Ok(results)
}

/// Writes `<output_dir>/<label>.csv` for every trace.
pub fn write_results(cfg: &ExperimentConfig, results: &[(String, RunTrace)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    results
        .iter()
        .map(|(label, trace)| {
            let path = cfg.output_dir.join(format!("{label}.csv"));
            write_trace(&path, trace)?;
            Ok(path)
        })
        .collect()
}
