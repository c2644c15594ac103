//! Minimize a badly conditioned quadratic with plain backtracking and with
//! the two multidimensional variants.
//!
//! cargo run --example quickstart

use mdbt::dataio::{synth_quadratic, SynthKind};
use mdbt::{run, Method, RunConfig};

fn main() -> mdbt::Result<()> {
    let d = 20;
    let obj = synth_quadratic(d, 1e6, SynthKind::Diagonal, 0)?;
    let x0 = vec![1.0; d];

    println!("{:<14} {:>8} {:>14} {:>10}", "method", "calls", "final f", "status");
    for method in [Method::GdLs, Method::MbBox, Method::MbEllipsoid] {
        let mut cfg = RunConfig::new(method.clone(), d);
        cfg.max_oracle_calls = 5_000;
        let trace = run(&obj, &x0, &cfg)?;
        let calls = trace.events.last().map(|e| e.total_oracle_calls()).unwrap_or(0);
        println!(
            "{:<14} {:>8} {:>14.4e} {:>10}",
            method.id(),
            calls,
            trace.best_f(),
            trace.status.map(|s| s.as_str()).unwrap_or("-")
        );
    }
    Ok(())
}
