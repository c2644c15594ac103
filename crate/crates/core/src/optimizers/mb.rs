use crate::candidate_sets::{init_set, CandidateSet, CutOutcome, SetKind};
use crate::error::{Error, Result};
use crate::hyperplanes::{hyperplane_from_probe, probe_armijo, Halfspace};
use crate::numkit::DiagPreconditioner;
use crate::objectives::{Objective, OracleCounter};

use super::{converged, EventKind, Method, Recorder, RunConfig, RunStatus, RunTrace};

/// What happened at one step of [`run_mb_observed`].
#[derive(Debug)]
pub enum MbStep<'a> {
    Accepted {
        f_before: f64,
        f_after: f64,
        candidate: &'a DiagPreconditioner,
        /// Set the candidate was drawn from.
        set: &'a CandidateSet,
        gradient: &'a [f64],
    },
    Cut {
        candidate: &'a DiagPreconditioner,
        halfspace: &'a Halfspace,
        before: &'a CandidateSet,
        outcome: &'a CutOutcome,
    },
    Fallback {
        candidate: &'a DiagPreconditioner,
        reason: &'a Error,
    },
}

/// Multidimensional backtracking with a box or ellipsoid candidate set.
pub fn run_mb(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    run_mb_observed(obj, x0, cfg, &mut |_| {})
}

/// [`run_mb`] with a callback on every accept, cut and fallback.
pub fn run_mb_observed(
    obj: &dyn Objective,
    x0: &[f64],
    cfg: &RunConfig,
    observer: &mut dyn FnMut(&MbStep<'_>),
) -> Result<RunTrace> {
    cfg.validate()?;
    let kind = match cfg.method {
        Method::MbBox => SetKind::Box,
        Method::MbEllipsoid => SetKind::Ellipsoid,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "run_mb called with method {}",
                cfg.method.id()
            )))
        }
    };
    let mut set = init_set(kind, obj.dim(), cfg.c0)?;
    let mut ctr = OracleCounter::default();
    let mut rec = Recorder::new(cfg);

    let mut x = x0.to_vec();
    let mut f = obj.value(&x, &mut ctr)?;
    let mut g = obj.gradient(&x, &mut ctr)?;
    rec.push(&ctr, f, EventKind::Init, Some(set.log_volume()), 0.0);

    let status = loop {
        if converged(&g, cfg) {
            break RunStatus::Converged;
        }
        if ctr.total() >= cfg.max_oracle_calls {
            break RunStatus::BudgetExhausted;
        }
        let p = match set.candidate(cfg.gamma, &g) {
            Ok(p) => p,
            Err(Error::ZeroGradient) => break RunStatus::Stationary,
            Err(e) => return Err(e),
        };
        let probe = probe_armijo(obj, &x, f, &g, &p, &mut ctr)?;

        if probe.accepted() {
            let f_before = f;
            x = probe.x_plus;
            f = probe.f_plus;
            observer(&MbStep::Accepted {
                f_before,
                f_after: f,
                candidate: &p,
                set: &set,
                gradient: &g,
            });
            let g_new = obj.gradient(&x, &mut ctr);
            rec.push(&ctr, f, EventKind::Accept, Some(set.log_volume()), probe.sq_norm_p);
            g = match g_new {
                Ok(g) => g,
                Err(Error::NumericalOverflow { .. }) => break RunStatus::Diverged,
                Err(e) => return Err(e),
            };
            if cfg.forward_step {
                set = set.forward_step();
                rec.push(&ctr, f, EventKind::Forward, Some(set.log_volume()), 0.0);
            }
            continue;
        }

        let cut = hyperplane_from_probe(obj, &probe, &p, &mut ctr)
            .and_then(|u| set.cut(&u, cfg.refine_lambda).map(|out| (u, out)));
        match cut {
            Ok((u, outcome)) => {
                observer(&MbStep::Cut {
                    candidate: &p,
                    halfspace: &u,
                    before: &set,
                    outcome: &outcome,
                });
                set = outcome.new_set;
                rec.push(&ctr, f, EventKind::Reject, Some(set.log_volume()), probe.sq_norm_p);
            }
            Err(reason @ (Error::DegenerateCut { .. } | Error::ShallowCut { .. })) => {
                observer(&MbStep::Fallback {
                    candidate: &p,
                    reason: &reason,
                });
                set = set.fallback_shrink();
                rec.push(
                    &ctr,
                    f,
                    EventKind::FallbackShrink,
                    Some(set.log_volume()),
                    probe.sq_norm_p,
                );
            }
            Err(e) => return Err(e),
        }
        if set.check_not_collapsed().is_err() {
            break RunStatus::SetCollapsed;
        }
    };
    Ok(rec.finish(status, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::CsrMatrix;
    use crate::objectives::QuadraticObjective;

    fn diag_quadratic(d: &[f64]) -> QuadraticObjective {
        QuadraticObjective::new(CsrMatrix::from_diagonal(d).unwrap()).unwrap()
    }

    #[test]
    fn rejects_non_mb_method() {
        let obj = diag_quadratic(&[1.0]);
        let cfg = RunConfig::new(Method::GdLs, 1);
        assert!(run_mb(&obj, &[1.0], &cfg).is_err());
    }

    #[test]
    fn one_dimensional_behaves_like_line_search() {
        let obj = diag_quadratic(&[1.0]);
        for method in [Method::MbBox, Method::MbEllipsoid] {
            let mut cfg = RunConfig::new(method.clone(), 1);
            cfg.forward_step = false;
            let mut first = None;
            let mut accepted_steps = Vec::new();
            let trace = run_mb_observed(&obj, &[1.0], &cfg, &mut |s| match s {
                MbStep::Cut { candidate, .. } if first.is_none() => {
                    first = Some(candidate.as_slice()[0]);
                }
                MbStep::Accepted { candidate, .. } => accepted_steps.push(candidate.as_slice()[0]),
                _ => {}
            })
            .unwrap();
            assert_eq!(trace.status, Some(RunStatus::Converged), "{method:?}");
            // first candidate is γ·c0 = 1e10/√2 (ellipsoid) or 0.5e10 (box)
            let want = cfg.gamma * cfg.c0;
            assert!((first.unwrap() - want).abs() <= 1e-6 * want, "{method:?}");
            assert!(accepted_steps.iter().all(|s| *s <= 2.0));
            assert_eq!(trace.count(EventKind::FallbackShrink), 0);
        }
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        let obj = diag_quadratic(&[1.0, 2.0]);
        let cfg = RunConfig::new(Method::MbEllipsoid, 2);
        let trace = run_mb(&obj, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(trace.status, Some(RunStatus::Converged));
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].n_grad_evals, 1);
    }
}
