//! Watch the candidate set shrink: every rejected step yields a half-space
//! that never removes the optimal preconditioner.
//!
//! cargo run --example cutting_planes

use mdbt::dataio::{synth_quadratic, SynthKind};
use mdbt::optimizers::{run_mb_observed, MbStep};
use mdbt::oracle::optimal_diag_precond;
use mdbt::{Method, RunConfig};

fn main() -> mdbt::Result<()> {
    let d = 3;
    let obj = synth_quadratic(d, 1e3, SynthKind::Rotated, 4)?;
    let p_star = optimal_diag_precond(obj.matrix(), 1e-10)?.p_star;
    println!("p* = {:?}", p_star.as_slice());

    let mut cfg = RunConfig::new(Method::MbEllipsoid, d);
    cfg.max_oracle_calls = 400;
    let (mut cuts, mut accepts) = (0, 0);
    let trace = run_mb_observed(&obj, &vec![1.0; d], &cfg, &mut |step| match step {
        MbStep::Cut { candidate, halfspace, outcome, .. } => {
            cuts += 1;
            println!(
                "cut {cuts:>2}: rejected p = {:<32} log-volume -{:.3}  lambda {:.3}  <u, p*> = {:.4}",
                candidate.as_slice().iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" "),
                outcome.log_volume_drop,
                outcome.lambda_used.unwrap_or(f64::NAN),
                halfspace.depth(p_star.as_slice()),
            );
        }
        MbStep::Accepted { f_before, f_after, .. } => {
            accepts += 1;
            if accepts <= 5 || accepts % 25 == 0 {
                println!("accept {accepts:>3}: f {f_before:.3e} -> {f_after:.3e}");
            }
        }
        MbStep::Fallback { reason, .. } => println!("fallback: {reason}"),
    })?;
    println!("{cuts} cuts, {accepts} accepted steps, final f = {:.3e}", trace.best_f());
    Ok(())
}
