//! Optimization loops and their traces.
//!
//! Every run owns an [`OracleCounter`] and records a [`RunTrace`]. Oracle
//! accounting for the backtracking methods: one value evaluation per Armijo
//! probe, one gradient per accepted iterate, and, for multidimensional
//! backtracking, one extra gradient per rejected candidate (for `∇f(x⁺)`).

mod baselines;
mod line_search;
mod mb;

pub use baselines::{
    hypergradient_update, run_diag_bb, run_gdhd, run_rprop, secant_diagonal, NonMonotoneWindow,
    RpropState,
};
pub use line_search::{run_fixed_precond_ls, run_gd_ls};
pub use mb::{run_mb, run_mb_observed, MbStep};

use std::fmt;
use std::str::FromStr;

use crate::candidate_sets::SetKind;
use crate::error::{Error, Result};
use crate::numkit::{norm_inf, DiagPreconditioner};
use crate::objectives::{Objective, OracleCounter};

/// Scale of the first step tried by every backtracking method.
pub const INITIAL_STEP_SCALE: f64 = 1e10;

/// Where a fixed-direction line-search gets its per-coordinate scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecondSource {
    Given(DiagPreconditioner),
    /// Inverse of `diag(∇²f(x_t))`, recomputed every iteration.
    HessianDiag,
    /// `1/√(s + 1e−10)` with `s` the running sum of squared gradients.
    Adagrad,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    MbBox,
    MbEllipsoid,
    GdLs,
    PrecondLs(PrecondSource),
    DiagBb,
    Rprop,
    GdHd,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::MbBox => "mb_box",
            Method::MbEllipsoid => "mb_ellipsoid",
            Method::GdLs => "gd_ls",
            Method::PrecondLs(PrecondSource::Given(_)) => "fixed_ls",
            Method::PrecondLs(PrecondSource::HessianDiag) => "diag_hessian_ls",
            Method::PrecondLs(PrecondSource::Adagrad) => "adagrad_ls",
            Method::DiagBb => "diag_bb",
            Method::Rprop => "rprop",
            Method::GdHd => "gdhd",
        }
    }

    /// Whether the method is guaranteed to decrease `f` on every accept.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, Method::DiagBb | Method::GdHd | Method::Rprop)
    }

    fn set_kind(&self) -> Option<SetKind> {
        match self {
            Method::MbBox => Some(SetKind::Box),
            Method::MbEllipsoid => Some(SetKind::Ellipsoid),
            Method::GdLs | Method::PrecondLs(_) => Some(SetKind::Interval),
            _ => None,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Parses every id except `fixed_ls`, which needs a preconditioner.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mb_box" => Method::MbBox,
            "mb_ellipsoid" => Method::MbEllipsoid,
            "gd_ls" => Method::GdLs,
            "diag_hessian_ls" => Method::PrecondLs(PrecondSource::HessianDiag),
            "adagrad_ls" => Method::PrecondLs(PrecondSource::Adagrad),
            "diag_bb" => Method::DiagBb,
            "rprop" => Method::Rprop,
            "gdhd" => Method::GdHd,
            other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        })
    }
}

/// Hyperparameters of the non-backtracking baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub bb_initial_step: f64,
    pub bb_mu: f64,
    pub bb_backtrack: f64,
    pub bb_window: usize,
    pub rprop_initial_step: f64,
    pub rprop_eta_plus: f64,
    pub rprop_eta_minus: f64,
    pub rprop_min_step: f64,
    pub rprop_max_step: f64,
    pub gdhd_beta: f64,
    pub gdhd_alpha0: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            bb_initial_step: 1e-6,
            bb_mu: 1e-6,
            bb_backtrack: 0.5,
            bb_window: 15,
            rprop_initial_step: 1e-1,
            rprop_eta_plus: 1.2,
            rprop_eta_minus: 0.5,
            rprop_min_step: 1e-6,
            rprop_max_step: 50.0,
            gdhd_beta: 0.02,
            gdhd_alpha0: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub gamma: f64,
    pub c0: f64,
    pub forward_step: bool,
    pub refine_lambda: bool,
    pub max_oracle_calls: u64,
    /// Stop once `‖∇f‖∞ ≤ grad_tol`.
    pub grad_tol: f64,
    pub seed: u64,
    pub baseline: BaselineParams,
}

impl RunConfig {
    /// Defaults for `method` in dimension `dim`.
    ///
    /// `c0` is chosen so the first tried step is on the order of 1e10:
    /// `d·1e10` (box), `√d·1e10` (ellipsoid), `2e10` with `γ = ½` for the
    /// line-searches.
    pub fn new(method: Method, dim: usize) -> Self {
        let d = dim.max(1) as f64;
        let (gamma, c0) = match method.set_kind() {
            Some(SetKind::Box) => (SetKind::Box.default_gamma(dim), d * INITIAL_STEP_SCALE),
            Some(SetKind::Ellipsoid) => (
                SetKind::Ellipsoid.default_gamma(dim),
                d.sqrt() * INITIAL_STEP_SCALE,
            ),
            Some(SetKind::Interval) => (0.5, 2.0 * INITIAL_STEP_SCALE),
            None => (0.5, INITIAL_STEP_SCALE),
        };
        Self {
            method,
            gamma,
            c0,
            forward_step: true,
            refine_lambda: true,
            max_oracle_calls: 10_000,
            grad_tol: 1e-10,
            seed: 0,
            baseline: BaselineParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} must be in (0, 1]", self.gamma));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return bad(format!("c0 = {} must be positive", self.c0));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol = {} must be non-negative", self.grad_tol));
        }
        if self.baseline.bb_window == 0 {
            return bad("bb_window must be positive".into());
        }
        Ok(())
    }

    /// `key=value` pairs echoed into trace headers.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("method".to_string(), self.method.id().to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("max_oracle_calls".to_string(), self.max_oracle_calls.to_string()),
            ("grad_tol".to_string(), fmt_f64(self.grad_tol)),
        ];
        let mut push = |k: &str, v: String| h.push((k.to_string(), v));
        let b = &self.baseline;
        match &self.method {
            Method::MbBox | Method::MbEllipsoid => {
                push("gamma", fmt_f64(self.gamma));
                push("c0", fmt_f64(self.c0));
                push("forward_step", self.forward_step.to_string());
                if self.method == Method::MbEllipsoid {
                    push("refine_lambda", self.refine_lambda.to_string());
                }
            }
            Method::GdLs | Method::PrecondLs(_) => {
                push("gamma", fmt_f64(self.gamma));
                push("c0", fmt_f64(self.c0));
                push("forward_step", self.forward_step.to_string());
            }
            Method::DiagBb => {
                push("bb_initial_step", fmt_f64(b.bb_initial_step));
                push("bb_mu", fmt_f64(b.bb_mu));
                push("bb_backtrack", fmt_f64(b.bb_backtrack));
                push("bb_window", b.bb_window.to_string());
            }
            Method::Rprop => {
                push("rprop_initial_step", fmt_f64(b.rprop_initial_step));
                push("rprop_eta_plus", fmt_f64(b.rprop_eta_plus));
                push("rprop_eta_minus", fmt_f64(b.rprop_eta_minus));
                push("rprop_min_step", fmt_f64(b.rprop_min_step));
                push("rprop_max_step", fmt_f64(b.rprop_max_step));
            }
            Method::GdHd => {
                push("gdhd_beta", fmt_f64(b.gdhd_beta));
                push("gdhd_alpha0", fmt_f64(b.gdhd_alpha0));
            }
        }
        h
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Starting point.
    Init,
    Accept,
    /// Rejected candidate followed by a cut (or a line-search backtrack).
    Reject,
    Forward,
    /// Rejected candidate without a usable cut; the set was halved.
    FallbackShrink,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Init => "init",
            EventKind::Accept => "accept",
            EventKind::Reject => "reject",
            EventKind::Forward => "forward",
            EventKind::FallbackShrink => "fallback_shrink",
        }
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "init" => EventKind::Init,
            "accept" => EventKind::Accept,
            "reject" => EventKind::Reject,
            "forward" => EventKind::Forward,
            "fallback_shrink" => EventKind::FallbackShrink,
            other => return Err(Error::InvalidArgument(format!("unknown event kind `{other}`"))),
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub event_index: usize,
    pub n_value_evals: u64,
    pub n_grad_evals: u64,
    /// `f` at the current iterate after the event.
    pub f_value: f64,
    pub kind: EventKind,
    /// Only recorded by multidimensional backtracking.
    pub set_log_volume: Option<f64>,
    /// `‖g‖²_P` of the probed candidate (0 when there was no probe).
    pub step_sqnorm: f64,
}

impl TraceEvent {
    pub fn total_oracle_calls(&self) -> u64 {
        self.n_value_evals + self.n_grad_evals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// `‖∇f‖∞ ≤ grad_tol`.
    Converged,
    /// Exactly zero gradient at a candidate computation.
    Stationary,
    BudgetExhausted,
    SetCollapsed,
    Diverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Stationary => "stationary",
            RunStatus::BudgetExhausted => "budget_exhausted",
            RunStatus::SetCollapsed => "set_collapsed",
            RunStatus::Diverged => "diverged",
        }
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "converged" => RunStatus::Converged,
            "stationary" => RunStatus::Stationary,
            "budget_exhausted" => RunStatus::BudgetExhausted,
            "set_collapsed" => RunStatus::SetCollapsed,
            "diverged" => RunStatus::Diverged,
            other => return Err(Error::InvalidArgument(format!("unknown status `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: Vec<(String, String)>,
    pub events: Vec<TraceEvent>,
    pub status: Option<RunStatus>,
    /// Final iterate; not persisted.
    pub x_final: Vec<f64>,
}

impl RunTrace {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn method(&self) -> Option<&str> {
        self.header_value("method")
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn best_f(&self) -> f64 {
        self.events
            .iter()
            .map(|e| e.f_value)
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn final_f(&self) -> Option<f64> {
        self.events.last().map(|e| e.f_value)
    }

    /// First total oracle-call count at which `f ≤ target`.
    pub fn calls_to_reach(&self, target: f64) -> Option<u64> {
        self.events
            .iter()
            .find(|e| e.f_value <= target)
            .map(TraceEvent::total_oracle_calls)
    }
}

/// Shared event bookkeeping for the loops.
pub(crate) struct Recorder {
    trace: RunTrace,
}

impl Recorder {
    pub(crate) fn new(cfg: &RunConfig) -> Self {
        Self {
            trace: RunTrace {
                header: cfg.header(),
                events: Vec::new(),
                status: None,
                x_final: Vec::new(),
            },
        }
    }

    pub(crate) fn push(
        &mut self,
        ctr: &OracleCounter,
        f_value: f64,
        kind: EventKind,
        set_log_volume: Option<f64>,
        step_sqnorm: f64,
    ) {
        let event_index = self.trace.events.len();
        self.trace.events.push(TraceEvent {
            event_index,
            n_value_evals: ctr.n_value_evals,
            n_grad_evals: ctr.n_grad_evals,
            f_value,
            kind,
            set_log_volume,
            step_sqnorm,
        });
    }

    pub(crate) fn finish(mut self, status: RunStatus, x: Vec<f64>) -> RunTrace {
        self.trace.status = Some(status);
        self.trace.x_final = x;
        self.trace
    }
}

pub(crate) fn converged(g: &[f64], cfg: &RunConfig) -> bool {
    norm_inf(g) <= cfg.grad_tol
}

/// Runs whichever method `cfg` names.
pub fn run(obj: &dyn Objective, x0: &[f64], cfg: &RunConfig) -> Result<RunTrace> {
    match &cfg.method {
        Method::MbBox | Method::MbEllipsoid => run_mb(obj, x0, cfg),
        Method::GdLs => run_gd_ls(obj, x0, cfg),
        Method::PrecondLs(source) => run_fixed_precond_ls(obj, x0, source, cfg),
        Method::DiagBb => run_diag_bb(obj, x0, cfg),
        Method::Rprop => run_rprop(obj, x0, cfg),
        Method::GdHd => run_gdhd(obj, x0, cfg),
    }
}
