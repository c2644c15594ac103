//! Diagonal Barzilai-Borwein with a non-monotone line-search, RPROP and
//! multiplicative hypergradient descent.
//!
//! RPROP and GD-HD never need `f` to update, so the `f_value` in their
//! traces comes from uncounted monitoring evaluations; only their gradient
//! calls are charged to the oracle counter.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::hyperplanes::probe_armijo;
use crate::numkit::{dot, norm2, DiagPreconditioner};
use crate::objectives::{Objective, OracleCounter};

use super::{converged, EventKind, Recorder, RunConfig, RunStatus, RunTrace};

const CURVATURE_MIN: f64 = 1e-20;
const CURVATURE_MAX: f64 = 1e20;

/// Sliding window of recent function values for the non-monotone test
/// `f(x⁺) ≤ max(window) − ½‖g‖²_P`.
#[derive(Debug, Clone)]
pub struct NonMonotoneWindow {
    values: VecDeque<f64>,
    capacity: usize,
}

impl NonMonotoneWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, f: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(f);
    }

    pub fn reference(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn accepts(&self, f_plus: f64, sq_norm_p: f64) -> bool {
        f_plus <= self.reference() - 0.5 * sq_norm_p
    }
}

/// Diagonal curvature estimate `u` (so the step is `Diag(1/u)`) from the
/// secant pair `(s, y)`.
///
/// Without a previous estimate this is the coordinate-wise secant `y/s`;
/// with one, `u = argmin ‖Diag(u)s − y‖² + μ‖u − u_prev‖²`, i.e.
/// `u[i] = (s[i]y[i] + μ·u_prev[i]) / (s[i]² + μ)`. Coordinates with
/// non-positive or undefined curvature fall back to the scalar
/// `⟨s, y⟩/⟨s, s⟩` (or keep `u_prev`); results are clamped to
/// `[1e−20, 1e20]`.
pub fn secant_diagonal(s: &[f64], y: &[f64], previous: Option<&[f64]>, mu: f64) -> Vec<f64> {
    let ss = dot(s, s);
    let scalar = if ss > 0.0 { dot(s, y) / ss } else { f64::NAN };
    s.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (si, yi))| {
            let raw = match previous {
                None => yi / si,
                Some(prev) => (si * yi + mu * prev[i]) / (si * si + mu),
            };
            let fallback = match previous {
                Some(prev) => prev[i],
                None => scalar,
            };
            let v = if raw > 0.0 && raw.is_finite() {
                raw
            } else if fallback > 0.0 && fallback.is_finite() {
                fallback
            } else {
                1.0
            };
            v.clamp(CURVATURE_MIN, CURVATURE_MAX)
        })
        .collect()
}

/// Diagonal Barzilai-Borwein with a non-monotone backtracking line-search.
///
/// The first iteration uses the scalar step `bb_initial_step`. Each
/// iteration backtracks `α ∈ {1, ½, ¼, …}` on `P = α·Diag(1/u)` against the
/// maximum of the last `bb_window` accepted values. No forward step.
pub fn run_diag_bb(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let bp = &cfg.baseline;
    let d = obj.dim();
    let mut ctr = OracleCounter::default();
    let mut rec = Recorder::new(cfg);

    let mut x = x0.to_vec();
    let mut f = obj.value(&x, &mut ctr)?;
    let mut g = obj.gradient(&x, &mut ctr)?;
    rec.push(&ctr, f, EventKind::Init, None, 0.0);
    let mut window = NonMonotoneWindow::new(bp.bb_window);
    window.push(f);
    let mut curvature: Option<Vec<f64>> = None;

    let status = 'outer: loop {
        if converged(&g, cfg) {
            break RunStatus::Converged;
        }
        let base: Vec<f64> = match &curvature {
            None => vec![bp.bb_initial_step; d],
            Some(u) => u.iter().map(|ui| 1.0 / ui).collect(),
        };
        let mut alpha = 1.0;
        let probe = loop {
            if ctr.total() >= cfg.max_oracle_calls {
                break 'outer RunStatus::BudgetExhausted;
            }
            let p = DiagPreconditioner::new(base.iter().map(|b| alpha * b).collect())?;
            // the window maximum plays the role of f(x) in the Armijo gap
            let probe = probe_armijo(obj, &x, window.reference(), &g, &p, &mut ctr)?;
            if probe.accepted() {
                break probe;
            }
            rec.push(&ctr, f, EventKind::Reject, None, probe.sq_norm_p);
            alpha *= bp.bb_backtrack;
            if alpha < 1e-300 {
                break 'outer RunStatus::SetCollapsed;
            }
        };
        let g_new = match obj.gradient(&probe.x_plus, &mut ctr) {
            Ok(g) => g,
            Err(Error::NumericalOverflow { .. }) => break RunStatus::Diverged,
            Err(e) => return Err(e),
        };
        let s: Vec<f64> = probe.x_plus.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        curvature = Some(secant_diagonal(&s, &y, curvature.as_deref(), bp.bb_mu));
        x = probe.x_plus;
        f = probe.f_plus;
        g = g_new;
        window.push(f);
        rec.push(&ctr, f, EventKind::Accept, None, probe.sq_norm_p);
    };
    Ok(rec.finish(status, x))
}

/// Per-coordinate RPROP state (the variant that zeroes the partial
/// derivative after a sign flip).
#[derive(Debug, Clone)]
pub struct RpropState {
    pub steps: Vec<f64>,
    prev_grad: Vec<f64>,
    eta_plus: f64,
    eta_minus: f64,
    min_step: f64,
    max_step: f64,
}

impl RpropState {
    pub fn new(dim: usize, cfg: &RunConfig) -> Self {
        let b = &cfg.baseline;
        Self {
            steps: vec![b.rprop_initial_step; dim],
            prev_grad: vec![0.0; dim],
            eta_plus: b.rprop_eta_plus,
            eta_minus: b.rprop_eta_minus,
            min_step: b.rprop_min_step,
            max_step: b.rprop_max_step,
        }
    }

    /// Updates step sizes from `g` and moves `x` in place.
    pub fn step(&mut self, x: &mut [f64], g: &[f64]) {
        for i in 0..x.len() {
            let mut gi = g[i];
            let agreement = gi * self.prev_grad[i];
            if agreement > 0.0 {
                self.steps[i] *= self.eta_plus;
            } else if agreement < 0.0 {
                self.steps[i] *= self.eta_minus;
                gi = 0.0;
            }
            self.steps[i] = self.steps[i].clamp(self.min_step, self.max_step);
            if gi != 0.0 {
                x[i] -= gi.signum() * self.steps[i];
            }
            self.prev_grad[i] = gi;
        }
    }
}

pub fn run_rprop(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let mut ctr = OracleCounter::default();
    let mut rec = Recorder::new(cfg);
    let mut state = RpropState::new(obj.dim(), cfg);
    let mut x = x0.to_vec();
    let f0 = obj.value(&x, &mut ctr)?;
    let mut g = obj.gradient(&x, &mut ctr)?;
    rec.push(&ctr, f0, EventKind::Init, None, 0.0);

    let status = loop {
        if converged(&g, cfg) {
            break RunStatus::Converged;
        }
        if ctr.total() >= cfg.max_oracle_calls {
            break RunStatus::BudgetExhausted;
        }
        state.step(&mut x, &g);
        let f = obj.compute_value(&x);
        g = match obj.gradient(&x, &mut ctr) {
            Ok(g) if f.is_finite() => g,
            Ok(_) | Err(Error::NumericalOverflow { .. }) => {
                rec.push(&ctr, f, EventKind::Accept, None, 0.0);
                break RunStatus::Diverged;
            }
            Err(e) => return Err(e),
        };
        rec.push(&ctr, f, EventKind::Accept, None, 0.0);
    };
    Ok(rec.finish(status, x))
}

/// Multiplicative hypergradient update
/// `α ← α·(1 + β·⟨g_new, g_old⟩/(‖g_new‖‖g_old‖))`.
pub fn hypergradient_update(alpha: f64, beta: f64, g_new: &[f64], g_old: &[f64]) -> f64 {
    let denom = norm2(g_new) * norm2(g_old) + f64::MIN_POSITIVE;
    alpha * (1.0 + beta * dot(g_new, g_old) / denom)
}

/// Plain gradient descent whose step-size follows [`hypergradient_update`].
/// No line-search; halts with `Diverged` once `f` or `∇f` stops being finite.
pub fn run_gdhd(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let bp = &cfg.baseline;
    let mut ctr = OracleCounter::default();
    let mut rec = Recorder::new(cfg);
    let mut x = x0.to_vec();
    let f0 = obj.value(&x, &mut ctr)?;
    let mut g = obj.gradient(&x, &mut ctr)?;
    rec.push(&ctr, f0, EventKind::Init, None, 0.0);
    let mut alpha = bp.gdhd_alpha0;
    let mut g_prev: Option<Vec<f64>> = None;

    let status = loop {
        if converged(&g, cfg) {
            break RunStatus::Converged;
        }
        if ctr.total() >= cfg.max_oracle_calls {
            break RunStatus::BudgetExhausted;
        }
        if let Some(prev) = &g_prev {
            alpha = hypergradient_update(alpha, bp.gdhd_beta, &g, prev);
        }
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= alpha * gi);
        let f = obj.compute_value(&x);
        let g_new = match obj.gradient(&x, &mut ctr) {
            Ok(g) if f.is_finite() => g,
            Ok(_) | Err(Error::NumericalOverflow { .. }) => {
                rec.push(&ctr, f, EventKind::Accept, None, alpha * dot(&g, &g));
                break RunStatus::Diverged;
            }
            Err(e) => return Err(e),
        };
        rec.push(&ctr, f, EventKind::Accept, None, alpha * dot(&g, &g));
        g_prev = Some(std::mem::replace(&mut g, g_new));
    };
    Ok(rec.finish(status, x))
}
