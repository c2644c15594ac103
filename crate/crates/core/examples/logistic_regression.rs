//! L2-free logistic regression on a small LIBSVM file whose features span
//! four orders of magnitude.
//!
//! cargo run --example logistic_regression [file.libsvm]

use std::path::PathBuf;

use mdbt::dataio::{initialize, prepend_bias, read_libsvm, InitSpec, Task};
use mdbt::objectives::LogisticRegressionL2;
use mdbt::optimizers::PrecondSource;
use mdbt::{run, Method, RunConfig};

fn main() -> mdbt::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy_classification.libsvm"));
    let ds = prepend_bias(&read_libsvm(&path, Task::Classification)?);
    let x0 = initialize(&ds, InitSpec::Bias)?;
    let d = ds.n_features();
    let obj = LogisticRegressionL2::new(ds.x.clone(), ds.y.clone())?;
    println!("{}: {} samples, {} features with bias", ds.name, ds.n_samples(), d);

    let methods = [
        Method::GdLs,
        Method::PrecondLs(PrecondSource::HessianDiag),
        Method::MbBox,
        Method::MbEllipsoid,
    ];
    for method in methods {
        let mut cfg = RunConfig::new(method.clone(), d);
        cfg.max_oracle_calls = 2_000;
        let t = run(&obj, &x0, &cfg)?;
        let target = t.best_f() + 1e-6;
        println!(
            "{:<16} best f = {:.8}  calls to within 1e-6 of its best = {}",
            method.id(),
            t.best_f(),
            t.calls_to_reach(target).unwrap_or(0)
        );
    }
    Ok(())
}
