//! Smooth convex objectives with counted value/gradient evaluations.
//!
//! Implementors provide the raw `compute_*` routines; the provided
//! [`Objective::value`] and [`Objective::gradient`] methods check dimensions,
//! bump the [`OracleCounter`] exactly once and turn non-finite results into
//! [`Error::NumericalOverflow`].

use crate::error::{check_dim, Error, Result};
use crate::numkit::{all_finite, dot, CsrMatrix};

/// Number of value and gradient evaluations made during one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounter {
    pub n_value_evals: u64,
    pub n_grad_evals: u64,
}

impl OracleCounter {
    pub fn total(&self) -> u64 {
        self.n_value_evals + self.n_grad_evals
    }
}

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    /// Uncounted `f(x)`. May return a non-finite value.
    fn compute_value(&self, x: &[f64]) -> f64;

    /// Uncounted `∇f(x)`.
    fn compute_gradient(&self, x: &[f64]) -> Vec<f64>;

    fn has_hessian_diag(&self) -> bool {
        false
    }

    /// Exact `diag(∇²f(x))`. Not an oracle call.
    fn hessian_diagonal(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("hessian diagonal"))
    }

    fn value(&self, x: &[f64], ctr: &mut OracleCounter) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        ctr.n_value_evals += 1;
        let v = self.compute_value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericalOverflow { what: "function value" })
        }
    }

    fn gradient(&self, x: &[f64], ctr: &mut OracleCounter) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        ctr.n_grad_evals += 1;
        let g = self.compute_gradient(x);
        if all_finite(&g) {
            Ok(g)
        } else {
            Err(Error::NumericalOverflow { what: "gradient" })
        }
    }

    /// Both at once; still counts as one value and one gradient evaluation.
    fn value_and_gradient(&self, x: &[f64], ctr: &mut OracleCounter) -> Result<(f64, Vec<f64>)> {
        let v = self.value(x, ctr)?;
        let g = self.gradient(x, ctr)?;
        Ok((v, g))
    }
}

/// `f(x) = ½⟨x, Ax⟩ − ⟨b, x⟩ + c` with symmetric PSD `A`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: CsrMatrix,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticObjective {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        let d = a.n_rows();
        Self::with_linear_term(a, vec![0.0; d], 0.0)
    }

    pub fn with_linear_term(a: CsrMatrix, b: Vec<f64>, c: f64) -> Result<Self> {
        check_dim(a.n_rows(), a.n_cols())?;
        check_dim(a.n_rows(), b.len())?;
        let asym = max_asymmetry(&a);
        if asym > 1e-12 * (1.0 + a.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            return Err(Error::NonSymmetric(asym));
        }
        Ok(Self { a, b, c })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.b
    }

    pub fn constant(&self) -> f64 {
        self.c
    }
}

fn max_asymmetry(a: &CsrMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            worst = worst.max((v - a.get(j, i)).abs());
        }
    }
    worst
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn compute_value(&self, x: &[f64]) -> f64 {
        let ax = self.a.spmv(x).expect("dimension checked by caller");
        0.5 * dot(x, &ax) - dot(&self.b, x) + self.c
    }

    fn compute_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.spmv(x).expect("dimension checked by caller");
        g.iter_mut().zip(&self.b).for_each(|(gi, bi)| *gi -= bi);
        g
    }

    fn has_hessian_diag(&self) -> bool {
        true
    }

    fn hessian_diagonal(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.a.diagonal())
    }
}

/// `f(w) = (1/n)(½‖Xw − y‖² + ½‖w‖²)`.
#[derive(Debug, Clone)]
pub struct LinearRegressionL2 {
    x: CsrMatrix,
    y: Vec<f64>,
}

impl LinearRegressionL2 {
    pub fn new(x: CsrMatrix, y: Vec<f64>) -> Result<Self> {
        check_dim(x.n_rows(), y.len())?;
        if y.is_empty() {
            return Err(Error::InvalidArgument("regression needs at least one row".into()));
        }
        Ok(Self { x, y })
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r = self.x.spmv(w).expect("dimension checked by caller");
        r.iter_mut().zip(&self.y).for_each(|(ri, yi)| *ri -= yi);
        r
    }
}

impl Objective for LinearRegressionL2 {
    fn dim(&self) -> usize {
        self.x.n_cols()
    }

    fn compute_value(&self, w: &[f64]) -> f64 {
        let r = self.residual(w);
        let n = self.y.len() as f64;
        (0.5 * dot(&r, &r) + 0.5 * dot(w, w)) / n
    }

    fn compute_gradient(&self, w: &[f64]) -> Vec<f64> {
        let r = self.residual(w);
        let n = self.y.len() as f64;
        let mut g = self.x.spmv_transpose(&r).expect("rows match");
        g.iter_mut().zip(w).for_each(|(gi, wi)| *gi = (*gi + wi) / n);
        g
    }

    fn has_hessian_diag(&self) -> bool {
        true
    }

    fn hessian_diagonal(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        let n = self.y.len() as f64;
        let mut h = vec![1.0; self.dim()];
        for i in 0..self.x.n_rows() {
            let (cols, vals) = self.x.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                h[c] += v * v;
            }
        }
        Ok(h.into_iter().map(|v| v / n).collect())
    }
}

/// Binary cross-entropy on labels in {0, 1} plus `(1/n)·½‖w‖²`.
#[derive(Debug, Clone)]
pub struct LogisticRegressionL2 {
    x: CsrMatrix,
    y: Vec<f64>,
}

impl LogisticRegressionL2 {
    pub fn new(x: CsrMatrix, y: Vec<f64>) -> Result<Self> {
        check_dim(x.n_rows(), y.len())?;
        if y.is_empty() {
            return Err(Error::InvalidArgument("classification needs at least one row".into()));
        }
        if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Self { x, y })
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Objective for LogisticRegressionL2 {
    fn dim(&self) -> usize {
        self.x.n_cols()
    }

    // −y log σ(z) − (1−y) log(1−σ(z)) = softplus(z) − y z
    fn compute_value(&self, w: &[f64]) -> f64 {
        let n = self.y.len() as f64;
        let loss: f64 = (0..self.x.n_rows())
            .map(|i| {
                let z = self.x.row_dot(i, w);
                softplus(z) - self.y[i] * z
            })
            .sum();
        (loss + 0.5 * dot(w, w)) / n
    }

    fn compute_gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.y.len() as f64;
        let r: Vec<f64> = (0..self.x.n_rows())
            .map(|i| sigmoid(self.x.row_dot(i, w)) - self.y[i])
            .collect();
        let mut g = self.x.spmv_transpose(&r).expect("rows match");
        g.iter_mut().zip(w).for_each(|(gi, wi)| *gi = (*gi + wi) / n);
        g
    }

    fn has_hessian_diag(&self) -> bool {
        true
    }

    fn hessian_diagonal(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        let n = self.y.len() as f64;
        let mut h = vec![1.0; self.dim()];
        for i in 0..self.x.n_rows() {
            let s = sigmoid(self.x.row_dot(i, w));
            let weight = s * (1.0 - s);
            let (cols, vals) = self.x.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                h[c] += weight * v * v;
            }
        }
        Ok(h.into_iter().map(|v| v / n).collect())
    }
}
