//! Multidimensional backtracking against the adaptive baselines on least
//! squares.
//!
//! cargo run --example baselines

use std::path::PathBuf;

use mdbt::dataio::{read_libsvm, Task};
use mdbt::objectives::LinearRegressionL2;
use mdbt::optimizers::PrecondSource;
use mdbt::{run, Method, RunConfig};

fn main() -> mdbt::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy_regression.libsvm");
    let ds = read_libsvm(&path, Task::Regression)?;
    let d = ds.n_features();
    let obj = LinearRegressionL2::new(ds.x, ds.y)?;
    let x0 = vec![0.0; d];

    let methods = [
        Method::GdLs,
        Method::PrecondLs(PrecondSource::Adagrad),
        Method::DiagBb,
        Method::Rprop,
        Method::GdHd,
        Method::MbBox,
        Method::MbEllipsoid,
    ];
    let traces: Vec<_> = methods
        .iter()
        .map(|m| {
            let mut cfg = RunConfig::new(m.clone(), d);
            cfg.max_oracle_calls = 3_000;
            run(&obj, &x0, &cfg).map(|t| (m.id(), t))
        })
        .collect::<mdbt::Result<_>>()?;
    let f_star = traces.iter().map(|(_, t)| t.best_f()).fold(f64::INFINITY, f64::min);

    println!("{:<16} {:>14} {:>16}", "method", "f - f*", "calls to 1e-8");
    for (id, t) in &traces {
        let reach = t
            .calls_to_reach(f_star + 1e-8 * f_star.abs().max(1.0))
            .map(|c| c.to_string())
            .unwrap_or_else(|| "-".into());
        println!("{id:<16} {:>14.3e} {reach:>16}", t.best_f() - f_star);
    }
    Ok(())
}
