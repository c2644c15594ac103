//! Armijo probes and the truncated separating hyperplanes built from
//! preconditioners that fail them.
//!
//! For a probed diagonal `q` with gap
//! `h(q) = f(x − Q∇f(x)) − f(x) + ½‖∇f(x)‖²_Q > 0`, convexity of `h` rules
//! out every `p ≥ 0` with `⟨v, p⟩ > 1`, where
//!
//! ```text
//! v = ((½g − g⁺) ⊙ g) / (f(x) − ⟨g⁺, Qg⟩ − f(x⁺))
//! ```
//!
//! and `u = max(v, 0)` rules out at least as much.

use crate::error::{check_dim, Error, Result};
use crate::numkit::{dot, preconditioned_step, weighted_sqnorm, DiagPreconditioner};
use crate::objectives::{Objective, OracleCounter};

/// Cuts with `⟨u, p⟩ > 1 − CUT_DEPTH_TOLERANCE` count as separating.
pub const CUT_DEPTH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub x_plus: Vec<f64>,
    pub f_x: f64,
    /// `+∞` when the objective overflowed at `x_plus`.
    pub f_plus: f64,
    pub g: Vec<f64>,
    pub sq_norm_p: f64,
    /// `f_plus − f_x + ½·sq_norm_p`.
    pub gap_h: f64,
}

impl ProbeResult {
    pub fn accepted(&self) -> bool {
        self.gap_h <= 0.0
    }
}

/// Evaluates `f` once at `x − P g` and checks sufficient decrease
/// `f(x⁺) ≤ f(x) − ½‖g‖²_P`. `f_x` and `g` are reused as given.
pub fn probe_armijo(
    obj: &dyn Objective,
    x: &[f64],
    f_x: f64,
    g: &[f64],
    p: &DiagPreconditioner,
    ctr: &mut OracleCounter,
) -> Result<ProbeResult> {
    check_dim(x.len(), g.len())?;
    let x_plus = preconditioned_step(x, p, g)?;
    let sq_norm_p = weighted_sqnorm(g, p)?;
    let f_plus = match obj.value(&x_plus, ctr) {
        Ok(v) => v,
        Err(Error::NumericalOverflow { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let gap_h = if f_plus.is_finite() {
        f_plus - f_x + 0.5 * sq_norm_p
    } else {
        f64::INFINITY
    };
    Ok(ProbeResult {
        x_plus,
        f_x,
        f_plus,
        g: g.to_vec(),
        sq_norm_p,
        gap_h,
    })
}

/// Normalized half-space `{p ≥ 0 : ⟨u, p⟩ > 1}` of invalid diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    u: Vec<f64>,
}

impl Halfspace {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("half-space normal must be finite and ≥ 0".into()));
        }
        Ok(Self { u })
    }

    pub fn normal(&self) -> &[f64] {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `⟨u, p⟩`; above 1 means `p` is excluded.
    pub fn depth(&self, p: &[f64]) -> f64 {
        dot(&self.u, p)
    }

    pub fn excludes(&self, p: &[f64]) -> bool {
        self.depth(p) > 1.0
    }
}

/// Untruncated `v` and its normalizer for a rejected probe.
pub fn raw_hyperplane(probe: &ProbeResult, g_plus: &[f64], p: &DiagPreconditioner) -> Result<(Vec<f64>, f64)> {
    let g = &probe.g;
    check_dim(g.len(), g_plus.len())?;
    check_dim(g.len(), p.dim())?;
    let pg_gplus: f64 = g
        .iter()
        .zip(p.as_slice())
        .zip(g_plus)
        .map(|((gi, pi), gpi)| gi * pi * gpi)
        .sum();
    let denominator = probe.f_x - pg_gplus - probe.f_plus;
    let v = g
        .iter()
        .zip(g_plus)
        .map(|(gi, gpi)| (0.5 * gi - gpi) * gi / denominator)
        .collect();
    Ok((v, denominator))
}

/// Truncated separating hyperplane for a rejected probe.
///
/// Returns [`Error::DegenerateCut`] when the normalizer is not positive
/// (impossible for convex `f` in exact arithmetic) and [`Error::ShallowCut`]
/// when the truncated normal does not exclude `p`.
pub fn separating_hyperplane(
    probe: &ProbeResult,
    g_plus: &[f64],
    p: &DiagPreconditioner,
) -> Result<Halfspace> {
    if !probe.f_plus.is_finite() {
        return Err(Error::DegenerateCut {
            denominator: f64::NEG_INFINITY,
        });
    }
    let (v, denominator) = raw_hyperplane(probe, g_plus, p)?;
    if !(denominator > 1e-300 * (1.0 + probe.f_x.abs())) {
        return Err(Error::DegenerateCut { denominator });
    }
    let u: Vec<f64> = v.into_iter().map(|vi| vi.max(0.0)).collect();
    if u.iter().any(|ui| !ui.is_finite()) {
        return Err(Error::DegenerateCut { denominator });
    }
    let hs = Halfspace::new(u)?;
    let depth = hs.depth(p.as_slice());
    if depth <= 1.0 - CUT_DEPTH_TOLERANCE {
        return Err(Error::ShallowCut { depth });
    }
    Ok(hs)
}

/// Evaluates `g⁺ = ∇f(x⁺)` (one gradient call) and builds the hyperplane.
pub fn hyperplane_from_probe(
    obj: &dyn Objective,
    probe: &ProbeResult,
    p: &DiagPreconditioner,
    ctr: &mut OracleCounter,
) -> Result<Halfspace> {
    if !probe.f_plus.is_finite() {
        return Err(Error::DegenerateCut {
            denominator: f64::NEG_INFINITY,
        });
    }
    let g_plus = match obj.gradient(&probe.x_plus, ctr) {
        Ok(g) => g,
        Err(Error::NumericalOverflow { .. }) => {
            return Err(Error::DegenerateCut {
                denominator: f64::NAN,
            })
        }
        Err(e) => return Err(e),
    };
    separating_hyperplane(probe, &g_plus, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::CsrMatrix;
    use crate::objectives::QuadraticObjective;

    fn scalar_quadratic(l: f64) -> QuadraticObjective {
        QuadraticObjective::new(CsrMatrix::from_diagonal(&[l]).unwrap()).unwrap()
    }

    fn p(v: &[f64]) -> DiagPreconditioner {
        DiagPreconditioner::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inverse_smoothness_step_meets_armijo_with_equality() {
        let obj = scalar_quadratic(2.0);
        let mut ctr = OracleCounter::default();
        let r = probe_armijo(&obj, &[1.0], 1.0, &[2.0], &p(&[0.5]), &mut ctr).unwrap();
        assert_eq!(r.f_plus, 0.0);
        assert_eq!(r.sq_norm_p, 2.0);
        assert_eq!(r.gap_h, 0.0);
        assert!(r.accepted());
        assert_eq!(ctr, OracleCounter { n_value_evals: 1, n_grad_evals: 0 });
    }

    #[test]
    fn overlong_step_is_rejected() {
        let obj = scalar_quadratic(2.0);
        let mut ctr = OracleCounter::default();
        let r = probe_armijo(&obj, &[1.0], 1.0, &[2.0], &p(&[1.0]), &mut ctr).unwrap();
        assert_eq!(r.x_plus, vec![-1.0]);
        assert_eq!(r.f_plus, 1.0);
        assert_eq!(r.gap_h, 2.0);
        assert!(!r.accepted());
    }

    #[test]
    fn zero_step_is_accepted() {
        let obj = QuadraticObjective::new(CsrMatrix::identity(3)).unwrap();
        let x = [1.0, -2.0, 3.0];
        let f = obj.compute_value(&x);
        let r = probe_armijo(&obj, &x, f, &x, &p(&[0.0; 3]), &mut OracleCounter::default()).unwrap();
        assert_eq!(r.x_plus, x.to_vec());
        assert_eq!(r.gap_h, 0.0);
        assert!(r.accepted());
    }

    #[test]
    fn overflow_maps_to_rejection() {
        let obj = scalar_quadratic(1.0);
        let r = probe_armijo(&obj, &[1.0], 0.5, &[1.0], &p(&[1e300]), &mut OracleCounter::default())
            .unwrap();
        assert_eq!(r.gap_h, f64::INFINITY);
        assert!(!r.accepted());
        assert!(matches!(
            separating_hyperplane(&r, &[0.0], &p(&[1e300])),
            Err(Error::DegenerateCut { .. })
        ));
    }

    #[test]
    fn hand_evaluated_hyperplane() {
        // f = ½x², x = 1, p = 3
        let obj = scalar_quadratic(1.0);
        let mut ctr = OracleCounter::default();
        let pre = p(&[3.0]);
        let r = probe_armijo(&obj, &[1.0], 0.5, &[1.0], &pre, &mut ctr).unwrap();
        assert_eq!(r.f_plus, 2.0);
        let hs = hyperplane_from_probe(&obj, &r, &pre, &mut ctr).unwrap();
        assert!((hs.normal()[0] - 5.0 / 9.0).abs() < 1e-15);
        assert!((hs.depth(pre.as_slice()) - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(ctr, OracleCounter { n_value_evals: 1, n_grad_evals: 1 });
    }

    #[test]
    fn truncation_keeps_non_negative_normals() {
        let obj = QuadraticObjective::new(CsrMatrix::from_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        let x = [1.0, 1.0];
        let g = obj.compute_gradient(&x);
        let pre = p(&[1.0, 1.0]);
        let r = probe_armijo(&obj, &x, obj.compute_value(&x), &g, &pre, &mut OracleCounter::default())
            .unwrap();
        let g_plus = obj.compute_gradient(&r.x_plus);
        let (v, _) = raw_hyperplane(&r, &g_plus, &pre).unwrap();
        let hs = separating_hyperplane(&r, &g_plus, &pre).unwrap();
        for (vi, ui) in v.iter().zip(hs.normal()) {
            assert!(*ui >= 0.0);
            if *vi >= 0.0 {
                assert_eq!(vi, ui);
            }
        }
    }
}
