//! Run an experiment file, save one CSV trace per method and draw them.
//!
//! cargo run --example experiment_and_plot [config] [out-dir]

use std::path::PathBuf;

use mdbt::bench::{load_config, read_trace, render_svg, run_experiment, write_results};

fn main() -> mdbt::Result<()> {
    let mut args = std::env::args_os().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/diag100.cfg"));
    let mut cfg = load_config(&config)?;
    if let Some(dir) = args.next() {
        cfg.output_dir = PathBuf::from(dir);
    }

    let results = run_experiment(&cfg)?;
    let paths = write_results(&cfg, &results)?;
    // read back what was written, as a separate plotting step would
    let traces = paths.iter().map(|p| read_trace(p)).collect::<mdbt::Result<Vec<_>>>()?;
    for (path, t) in paths.iter().zip(&traces) {
        println!("{} ({} events)", path.display(), t.events.len());
    }
    let svg = cfg.output_dir.join(format!("{}.svg", cfg.name));
    std::fs::write(&svg, render_svg(&traces, None)?).map_err(|e| mdbt::Error::io(&svg, e))?;
    println!("{}", svg.display());
    Ok(())
}
