//! Shrinking search regions over preconditioner diagonals.
//!
//! * `Interval`: isotropic step-sizes `{α·1 : 0 ≤ α ≤ α_max}`.
//! * `Box`: `B(b) = {p ≥ 0 : p ≤ b}`.
//! * `Ellipsoid`: the non-negative part of the centered axis-aligned
//!   ellipsoid `E(a) = {p ≥ 0 : Σ a[i]·p[i]² ≤ 1}`.
//!
//! All operations are pure and return new sets.

use crate::error::{Error, Result};
use crate::hyperplanes::Halfspace;
use crate::numkit::DiagPreconditioner;

/// Multiplicative set growth after an accepted step.
pub const FORWARD_FACTOR: f64 = 1.1;

/// A run aborts once every semi-axis is below this.
pub const MIN_SEMI_AXIS: f64 = 1e-18;

const LAMBDA_LO: f64 = 1e-12;
const LAMBDA_HI: f64 = 1.0 - 1e-12;
const LAMBDA_BISECTION_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Interval,
    Box,
    Ellipsoid,
}

impl SetKind {
    /// Backtracking coefficient with the worst-case guarantees:
    /// `1/2` interval, `1/(2d)` box, `1/√(2d)` ellipsoid.
    pub fn default_gamma(self, dim: usize) -> f64 {
        let d = dim as f64;
        match self {
            SetKind::Interval => 0.5,
            SetKind::Box => 1.0 / (2.0 * d),
            SetKind::Ellipsoid => 1.0 / (2.0 * d).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateSet {
    Interval { alpha_max: f64, dim: usize },
    Box { b: Vec<f64> },
    Ellipsoid { a: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutOutcome {
    pub new_set: CandidateSet,
    pub log_volume_drop: f64,
    /// Convex-combination weight on the old ellipsoid (ellipsoid cuts only).
    pub lambda_used: Option<f64>,
    /// Whether the numerically refined weight replaced the closed form.
    pub refined: bool,
}

/// `S₀` with `c₀·1` on its boundary.
pub fn init_set(kind: SetKind, dim: usize, c0: f64) -> Result<CandidateSet> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial scale c0 = {c0} must be positive")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(match kind {
        SetKind::Interval => CandidateSet::Interval { alpha_max: c0, dim },
        SetKind::Box => CandidateSet::Box { b: vec![c0; dim] },
        SetKind::Ellipsoid => CandidateSet::Ellipsoid {
            a: vec![1.0 / (dim as f64 * c0 * c0); dim],
        },
    })
}

impl CandidateSet {
    pub fn kind(&self) -> SetKind {
        match self {
            CandidateSet::Interval { .. } => SetKind::Interval,
            CandidateSet::Box { .. } => SetKind::Box,
            CandidateSet::Ellipsoid { .. } => SetKind::Ellipsoid,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CandidateSet::Interval { dim, .. } => *dim,
            CandidateSet::Box { b } => b.len(),
            CandidateSet::Ellipsoid { a } => a.len(),
        }
    }

    /// Whether the diagonal `p` lies in the set (up to relative `tol`).
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.iter().any(|v| *v < 0.0) || p.len() != self.dim() {
            return false;
        }
        match self {
            CandidateSet::Interval { alpha_max, .. } => {
                let first = p[0];
                p.iter().all(|v| *v == first) && first <= alpha_max * (1.0 + tol)
            }
            CandidateSet::Box { b } => p.iter().zip(b).all(|(pi, bi)| *pi <= bi * (1.0 + tol)),
            CandidateSet::Ellipsoid { a } => {
                ellipsoid_sqnorm(a, p) <= 1.0 + tol
            }
        }
    }

    /// Candidate preconditioner backtracked by `gamma` from the set's
    /// largest point (box, interval) or from the point maximizing
    /// `‖g‖²_P` over the set (ellipsoid).
    pub fn candidate(&self, gamma: f64, g: &[f64]) -> Result<DiagPreconditioner> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} must be in (0, 1]")));
        }
        match self {
            CandidateSet::Interval { alpha_max, dim } => {
                DiagPreconditioner::uniform(*dim, gamma * alpha_max)
            }
            CandidateSet::Box { b } => DiagPreconditioner::new(b.iter().map(|v| gamma * v).collect()),
            CandidateSet::Ellipsoid { a } => {
                if g.len() != a.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        actual: g.len(),
                    });
                }
                // argmax ⟨g², p⟩ over ‖p‖_A ≤ 1 is A⁻¹g² / ‖g²‖_{A⁻¹}
                let scaled: Vec<f64> = g.iter().zip(a).map(|(gi, ai)| gi * gi / ai).collect();
                let norm = g
                    .iter()
                    .zip(&scaled)
                    .map(|(gi, si)| gi * gi * si)
                    .sum::<f64>()
                    .sqrt();
                if norm == 0.0 {
                    return Err(Error::ZeroGradient);
                }
                DiagPreconditioner::new(scaled.into_iter().map(|s| gamma * s / norm).collect())
            }
        }
    }

    /// Smallest set of the same family containing `self ∩ {p : ⟨u, p⟩ ≤ 1}`
    /// (box, interval), or the volume-reducing ellipsoid through the convex
    /// combination `λa + (1 − λ)u²`.
    pub fn cut(&self, u: &Halfspace, refine: bool) -> Result<CutOutcome> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.dim(),
            });
        }
        let u = u.normal();
        if u.iter().all(|v| *v == 0.0) {
            return Err(Error::ShallowCut { depth: 0.0 });
        }
        let (new_set, lambda_used, refined) = match self {
            CandidateSet::Interval { alpha_max, dim } => {
                // the half-space meets the ray α·1 at α = 1/Σu
                let bound = 1.0 / u.iter().sum::<f64>();
                if bound >= *alpha_max {
                    return Err(Error::ShallowCut { depth: alpha_max / bound });
                }
                (CandidateSet::Interval { alpha_max: bound, dim: *dim }, None, false)
            }
            CandidateSet::Box { b } => {
                // ∞-free min{b, 1/u}
                let b_new: Vec<f64> = b
                    .iter()
                    .zip(u)
                    .map(|(bi, ui)| 1.0 / (1.0 / bi).max(*ui))
                    .collect();
                if b_new == *b {
                    return Err(Error::ShallowCut { depth: 0.0 });
                }
                (CandidateSet::Box { b: b_new }, None, false)
            }
            CandidateSet::Ellipsoid { a } if a.len() == 1 => {
                // 1-D: the half-space is an interval end; E(u²) is exact.
                let u2 = u[0] * u[0];
                if u2 <= a[0] {
                    return Err(Error::ShallowCut { depth: (u2 / a[0]).sqrt() });
                }
                (CandidateSet::Ellipsoid { a: vec![u2] }, Some(0.0), false)
            }
            CandidateSet::Ellipsoid { a } => {
                let (a_new, lambda, refined) = ellipsoid_cut(a, u, refine)?;
                (CandidateSet::Ellipsoid { a: a_new }, Some(lambda), refined)
            }
        };
        let log_volume_drop = self.log_volume() - new_set.log_volume();
        Ok(CutOutcome {
            new_set,
            log_volume_drop,
            lambda_used,
            refined,
        })
    }

    /// Line-search backtrack: `α_max ← γ·α_max`. Other sets are unchanged.
    pub fn backtrack(&self, gamma: f64) -> CandidateSet {
        match self {
            CandidateSet::Interval { alpha_max, dim } => CandidateSet::Interval {
                alpha_max: gamma * alpha_max,
                dim: *dim,
            },
            other => other.clone(),
        }
    }

    /// Enlarges the set after an accepted step: ×1.1 for box and interval,
    /// `a / √1.1` for the ellipsoid.
    pub fn forward_step(&self) -> CandidateSet {
        match self {
            CandidateSet::Interval { alpha_max, dim } => CandidateSet::Interval {
                alpha_max: FORWARD_FACTOR * alpha_max,
                dim: *dim,
            },
            CandidateSet::Box { b } => CandidateSet::Box {
                b: b.iter().map(|v| FORWARD_FACTOR * v).collect(),
            },
            CandidateSet::Ellipsoid { a } => {
                let s = FORWARD_FACTOR.sqrt();
                CandidateSet::Ellipsoid {
                    a: a.iter().map(|v| v / s).collect(),
                }
            }
        }
    }

    /// Halves every semi-axis. Used when a rejection yields no usable cut.
    pub fn fallback_shrink(&self) -> CandidateSet {
        match self {
            CandidateSet::Interval { alpha_max, dim } => CandidateSet::Interval {
                alpha_max: alpha_max / 2.0,
                dim: *dim,
            },
            CandidateSet::Box { b } => CandidateSet::Box {
                b: b.iter().map(|v| v / 2.0).collect(),
            },
            CandidateSet::Ellipsoid { a } => CandidateSet::Ellipsoid {
                a: a.iter().map(|v| 4.0 * v).collect(),
            },
        }
    }

    /// Log-volume up to an additive constant per family.
    pub fn log_volume(&self) -> f64 {
        match self {
            CandidateSet::Interval { alpha_max, .. } => alpha_max.ln(),
            CandidateSet::Box { b } => b.iter().map(|v| v.ln()).sum(),
            CandidateSet::Ellipsoid { a } => -0.5 * a.iter().map(|v| v.ln()).sum::<f64>(),
        }
    }

    pub fn max_semi_axis(&self) -> f64 {
        match self {
            CandidateSet::Interval { alpha_max, .. } => *alpha_max,
            CandidateSet::Box { b } => b.iter().cloned().fold(0.0, f64::max),
            CandidateSet::Ellipsoid { a } => a.iter().map(|v| 1.0 / v.sqrt()).fold(0.0, f64::max),
        }
    }

    pub fn check_not_collapsed(&self) -> Result<()> {
        let max_semi_axis = self.max_semi_axis();
        if max_semi_axis < MIN_SEMI_AXIS {
            Err(Error::SetCollapsed { max_semi_axis })
        } else {
            Ok(())
        }
    }
}

/// `‖p‖²_A = Σ a[i]·p[i]²`.
pub fn ellipsoid_sqnorm(a: &[f64], p: &[f64]) -> f64 {
    a.iter().zip(p).map(|(ai, pi)| ai * pi * pi).sum()
}

/// Closed-form convex-combination weight `λ = (ℓ/d)·(d−1)/(ℓ−1)` with
/// `ℓ = ‖u‖²_{A⁻¹}`. Requires `ℓ > d`.
pub fn closed_form_lambda(a: &[f64], u: &[f64]) -> Result<f64> {
    let d = a.len() as f64;
    let ell: f64 = u.iter().zip(a).map(|(ui, ai)| ui * ui / ai).sum();
    if !(ell > d * (1.0 + 1e-9)) || !ell.is_finite() {
        return Err(Error::ShallowCut { depth: ell / d });
    }
    Ok((ell / d) * (d - 1.0) / (ell - 1.0))
}

/// `φ(λ) = −Σ log(λ·a[i] + (1 − λ)·u[i]²)`, the log-volume of the combined
/// ellipsoid up to a factor and a constant.
pub fn neg_log_det(a: &[f64], u: &[f64], lambda: f64) -> f64 {
    -a.iter()
        .zip(u)
        .map(|(ai, ui)| (lambda * ai + (1.0 - lambda) * ui * ui).ln())
        .sum::<f64>()
}

fn neg_log_det_derivative(a: &[f64], u: &[f64], lambda: f64) -> f64 {
    -a.iter()
        .zip(u)
        .map(|(ai, ui)| {
            let u2 = ui * ui;
            (ai - u2) / (lambda * ai + (1.0 - lambda) * u2)
        })
        .sum::<f64>()
}

/// Minimizes the convex `φ` over `[1e−12, 1 − 1e−12]` by bisection on `φ′`.
pub fn refine_lambda(a: &[f64], u: &[f64], warm_start: f64) -> f64 {
    let (mut lo, mut hi) = (LAMBDA_LO, LAMBDA_HI);
    if neg_log_det_derivative(a, u, lo) >= 0.0 {
        return lo;
    }
    if neg_log_det_derivative(a, u, hi) <= 0.0 {
        return hi;
    }
    // shrink the bracket around the warm start first
    let mid0 = warm_start.clamp(lo, hi);
    if neg_log_det_derivative(a, u, mid0) > 0.0 {
        hi = mid0;
    } else {
        lo = mid0;
    }
    for _ in 0..LAMBDA_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if neg_log_det_derivative(a, u, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ellipsoid_cut(a: &[f64], u: &[f64], refine: bool) -> Result<(Vec<f64>, f64, bool)> {
    let lambda_closed = closed_form_lambda(a, u)?;
    let mut lambda = lambda_closed;
    let mut refined = false;
    if refine {
        let candidate = refine_lambda(a, u, lambda_closed);
        if neg_log_det(a, u, candidate) < neg_log_det(a, u, lambda_closed) {
            lambda = candidate;
            refined = true;
        }
    }
    let a_new: Vec<f64> = a
        .iter()
        .zip(u)
        .map(|(ai, ui)| lambda * ai + (1.0 - lambda) * ui * ui)
        .collect();
    if a_new.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::ShallowCut { depth: f64::NAN });
    }
    Ok((a_new, lambda, refined))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(u: &[f64]) -> Halfspace {
        Halfspace::new(u.to_vec()).unwrap()
    }

    #[test]
    fn init_fixtures() {
        assert_eq!(
            init_set(SetKind::Box, 2, 4.0).unwrap(),
            CandidateSet::Box { b: vec![4.0, 4.0] }
        );
        let e = init_set(SetKind::Ellipsoid, 2, 4.0).unwrap();
        assert_eq!(e, CandidateSet::Ellipsoid { a: vec![1.0 / 32.0; 2] });
        if let CandidateSet::Ellipsoid { a } = &e {
            assert_eq!(ellipsoid_sqnorm(a, &[4.0, 4.0]), 1.0);
        }
        assert_eq!(
            init_set(SetKind::Interval, 3, 1e10).unwrap(),
            CandidateSet::Interval { alpha_max: 1e10, dim: 3 }
        );
        assert!(init_set(SetKind::Box, 2, 0.0).is_err());
        assert!(init_set(SetKind::Box, 2, -1.0).is_err());
    }

    #[test]
    fn candidate_fixtures() {
        let b = CandidateSet::Box { b: vec![4.0, 2.0] };
        assert_eq!(b.candidate(0.25, &[9.0, 9.0]).unwrap().as_slice(), &[1.0, 0.5]);

        let e = CandidateSet::Ellipsoid { a: vec![1.0, 1.0] };
        assert_eq!(e.candidate(1.0, &[1.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);

        let a = vec![4.0, 1.0];
        let e = CandidateSet::Ellipsoid { a: a.clone() };
        let p = e.candidate(1.0, &[1.0, 1.0]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((p.as_slice()[0] - 1.0 / (2.0 * s5)).abs() < 1e-15);
        assert!((p.as_slice()[1] - 2.0 / s5).abs() < 1e-15);
        assert!((ellipsoid_sqnorm(&a, p.as_slice()) - 1.0).abs() < 1e-15);

        assert!(matches!(e.candidate(0.5, &[0.0, 0.0]), Err(Error::ZeroGradient)));

        let i = CandidateSet::Interval { alpha_max: 4.0, dim: 2 };
        assert_eq!(i.candidate(0.5, &[0.0, 0.0]).unwrap().as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn box_cut_fixtures() {
        let b = CandidateSet::Box { b: vec![1.0, 1.0] };
        let out = b.cut(&hs(&[3.0, 3.0]), false).unwrap();
        let CandidateSet::Box { b: nb } = &out.new_set else { panic!() };
        assert!((nb[0] - 1.0 / 3.0).abs() < 1e-16 && (nb[1] - 1.0 / 3.0).abs() < 1e-16);
        let ratio = (-out.log_volume_drop).exp();
        assert!((ratio - 1.0 / 9.0).abs() < 1e-14);
        assert!(ratio <= 1.0 / 3.0);

        let out = b.cut(&hs(&[2.0, 0.0]), false).unwrap();
        assert_eq!(out.new_set, CandidateSet::Box { b: vec![0.5, 1.0] });

        assert!(matches!(b.cut(&hs(&[0.5, 0.5]), false), Err(Error::ShallowCut { .. })));
    }

    #[test]
    fn ellipsoid_cut_fixture() {
        let e = CandidateSet::Ellipsoid { a: vec![1.0, 1.0] };
        let u = [2.0, 0.0];
        assert!((closed_form_lambda(&[1.0, 1.0], &u).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let out = e.cut(&hs(&u), false).unwrap();
        let CandidateSet::Ellipsoid { a } = &out.new_set else { panic!() };
        assert!((a[0] - 2.0).abs() < 1e-15 && (a[1] - 2.0 / 3.0).abs() < 1e-15);
        let ratio = (-out.log_volume_drop).exp();
        assert!((ratio - (3.0f64 / 4.0).sqrt()).abs() < 1e-12);
        assert!(ratio <= 0.25f64.exp() / 2f64.sqrt());
        assert_eq!(out.lambda_used, Some(2.0 / 3.0));
        assert!(!out.refined);

        let refined = e.cut(&hs(&u), true).unwrap();
        assert!(refined.log_volume_drop >= out.log_volume_drop);
    }

    #[test]
    fn ellipsoid_shallow_cut() {
        let e = CandidateSet::Ellipsoid { a: vec![1.0, 1.0] };
        assert!(matches!(e.cut(&hs(&[1.0, 1.0]), false), Err(Error::ShallowCut { .. })));
    }

    #[test]
    fn one_dimensional_ellipsoid_is_tight() {
        let e = CandidateSet::Ellipsoid { a: vec![1.0] };
        let out = e.cut(&hs(&[4.0]), true).unwrap();
        assert_eq!(out.new_set, CandidateSet::Ellipsoid { a: vec![16.0] });
        // semi-axis 1/4 = 1/u
        assert_eq!(out.new_set.max_semi_axis(), 0.25);
    }

    #[test]
    fn interval_cut_and_backtrack() {
        let i = CandidateSet::Interval { alpha_max: 4.0, dim: 2 };
        let out = i.cut(&hs(&[0.5, 0.5]), false).unwrap();
        assert_eq!(out.new_set, CandidateSet::Interval { alpha_max: 1.0, dim: 2 });
        assert_eq!(i.backtrack(0.5), CandidateSet::Interval { alpha_max: 2.0, dim: 2 });
    }

    #[test]
    fn forward_step_fixtures() {
        let b = CandidateSet::Box { b: vec![1.0, 1.0] }.forward_step();
        assert_eq!(b, CandidateSet::Box { b: vec![1.1, 1.1] });
        let e = CandidateSet::Ellipsoid { a: vec![1.0, 1.0] }.forward_step();
        let want = 1.0 / 1.1f64.sqrt();
        assert_eq!(e, CandidateSet::Ellipsoid { a: vec![want, want] });
        let i = CandidateSet::Interval { alpha_max: 2.0, dim: 1 }.forward_step();
        let CandidateSet::Interval { alpha_max, .. } = i else { panic!() };
        assert!((alpha_max - 2.2).abs() < 1e-15);

        let box_before = CandidateSet::Box { b: vec![1.0, 3.0] };
        let grown = box_before.forward_step().log_volume() - box_before.log_volume();
        assert!((grown - 2.0 * 1.1f64.ln()).abs() < 1e-14);
        let ell = CandidateSet::Ellipsoid { a: vec![2.0, 5.0, 0.1] };
        let grown = ell.forward_step().log_volume() - ell.log_volume();
        assert!((grown - 1.5 * 0.5 * 1.1f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_volume_fixtures() {
        assert!((CandidateSet::Box { b: vec![2.0, 2.0] }.log_volume() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(CandidateSet::Ellipsoid { a: vec![1.0, 1.0] }.log_volume(), 0.0);
        assert!((CandidateSet::Ellipsoid { a: vec![4.0, 1.0] }.log_volume() + 0.5 * 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn fallback_halves_semi_axes() {
        let e = CandidateSet::Ellipsoid { a: vec![1.0, 0.25] };
        assert_eq!(e.fallback_shrink().max_semi_axis(), 1.0);
        let b = CandidateSet::Box { b: vec![1.0, 8.0] };
        assert_eq!(b.fallback_shrink().max_semi_axis(), 4.0);
    }

    #[test]
    fn collapse_detection() {
        let b = CandidateSet::Box { b: vec![1e-19, 1e-20] };
        assert!(matches!(b.check_not_collapsed(), Err(Error::SetCollapsed { .. })));
        assert!(CandidateSet::Box { b: vec![1e-19, 1.0] }.check_not_collapsed().is_ok());
    }

    #[test]
    fn refined_lambda_minimizes_volume() {
        let a = [1.0, 2.0, 0.5, 3.0];
        let u = [3.0, 0.0, 2.0, 0.1];
        let closed = closed_form_lambda(&a, &u).unwrap();
        let best = refine_lambda(&a, &u, closed);
        let phi = neg_log_det(&a, &u, best);
        assert!(phi <= neg_log_det(&a, &u, closed));
        for k in 1..1000 {
            let l = k as f64 / 1000.0;
            assert!(phi <= neg_log_det(&a, &u, l) + 1e-12);
        }
    }
}
