use crate::candidate_sets::{init_set, SetKind};
use crate::error::{Error, Result};
use crate::hyperplanes::probe_armijo;
use crate::numkit::{dot, DiagPreconditioner};
use crate::objectives::{Objective, OracleCounter};

use super::{converged, EventKind, Method, PrecondSource, Recorder, RunConfig, RunStatus, RunTrace};

const ADAGRAD_EPS: f64 = 1e-10;

/// Gradient descent with Armijo backtracking: try `γ·α_max`, on failure
/// `α_max ← γ·α_max`, on success grow `α_max` by 1.1 (if enabled).
pub fn run_gd_ls(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    if cfg.method != Method::GdLs {
        return Err(Error::InvalidArgument(format!(
            "run_gd_ls called with method {}",
            cfg.method.id()
        )));
    }
    scaled_line_search(obj, x0, cfg, |_, _, _| Ok(None))
}

/// Line-search along `d = M g` with `M` fixed, the inverse Hessian diagonal
/// at `x_t`, or AdaGrad's `1/√(s + 1e−10)`. The step `α` is accepted when
/// `f(x − αd) ≤ f(x) − (α/2)⟨g, d⟩`.
pub fn run_fixed_precond_ls(
    obj: &dyn Objective,
    x0: &[f64],
    source: &PrecondSource,
    cfg: &RunConfig,
) -> Result<RunTrace> {
    let d = obj.dim();
    match source {
        PrecondSource::Given(p) if p.dim() != d => {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: p.dim(),
            })
        }
        PrecondSource::HessianDiag if !obj.has_hessian_diag() => {
            return Err(Error::Unsupported("hessian diagonal"))
        }
        _ => {}
    }
    let mut accumulator = vec![0.0; d];
    scaled_line_search(obj, x0, cfg, |x, g, _| {
        let scaling = match source {
            PrecondSource::Given(p) => p.as_slice().to_vec(),
            PrecondSource::HessianDiag => obj
                .hessian_diagonal(x)?
                .into_iter()
                .map(|h| if h > 0.0 && h.is_finite() { 1.0 / h } else { 1.0 })
                .collect(),
            PrecondSource::Adagrad => {
                accumulator.iter_mut().zip(g).for_each(|(s, gi)| *s += gi * gi);
                accumulator
                    .iter()
                    .map(|s| 1.0 / (s + ADAGRAD_EPS).sqrt())
                    .collect()
            }
        };
        Ok(Some(scaling))
    })
}

/// Shared loop. `scaling(x, g, iteration)` returns the per-coordinate
/// direction scaling `M` (or `None` for the identity); it is called once
/// per accepted iterate.
fn scaled_line_search(
    obj: &dyn Objective,
    x0: &[f64],
    cfg: &RunConfig,
    mut scaling: impl FnMut(&[f64], &[f64], usize) -> Result<Option<Vec<f64>>>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let d = obj.dim();
    let mut set = init_set(SetKind::Interval, d, cfg.c0)?;
    let mut ctr = OracleCounter::default();
    let mut rec = Recorder::new(cfg);

    let mut x = x0.to_vec();
    let mut f = obj.value(&x, &mut ctr)?;
    let mut g = obj.gradient(&x, &mut ctr)?;
    rec.push(&ctr, f, EventKind::Init, None, 0.0);

    let mut iteration = 0;
    let status = 'outer: loop {
        if converged(&g, cfg) {
            break RunStatus::Converged;
        }
        let mut m = scaling(&x, &g, iteration)?.unwrap_or_else(|| vec![1.0; d]);
        let gmg: f64 = g.iter().zip(&m).map(|(gi, mi)| gi * gi * mi).sum();
        if !(gmg > 0.0 && gmg.is_finite()) {
            m = vec![1.0; d];
        }
        iteration += 1;

        loop {
            if ctr.total() >= cfg.max_oracle_calls {
                break 'outer RunStatus::BudgetExhausted;
            }
            let alpha = set.candidate(cfg.gamma, &g)?.as_slice()[0];
            let p = DiagPreconditioner::new(m.iter().map(|mi| alpha * mi).collect())?;
            let probe = probe_armijo(obj, &x, f, &g, &p, &mut ctr)?;
            if probe.accepted() {
                x = probe.x_plus;
                f = probe.f_plus;
                let g_new = obj.gradient(&x, &mut ctr);
                rec.push(&ctr, f, EventKind::Accept, None, probe.sq_norm_p);
                g = match g_new {
                    Ok(g) => g,
                    Err(Error::NumericalOverflow { .. }) => break 'outer RunStatus::Diverged,
                    Err(e) => return Err(e),
                };
                if cfg.forward_step {
                    set = set.forward_step();
                    rec.push(&ctr, f, EventKind::Forward, None, 0.0);
                }
                break;
            }
            set = set.backtrack(cfg.gamma);
            rec.push(&ctr, f, EventKind::Reject, None, probe.sq_norm_p);
            if set.check_not_collapsed().is_err() {
                break 'outer RunStatus::SetCollapsed;
            }
        }
    };
    debug_assert!(dot(&x, &x).is_finite());
    Ok(rec.finish(status, x))
}
