//! Dense-vector and CSR primitives shared by the rest of the crate.
//!
//! Dense vectors are plain `[f64]` slices and `Vec<f64>`. The only sparse
//! layout is CSR; dense matrices are stored as CSR with full rows.

use crate::error::{check_dim, Error, Result};

/// Finite stand-in for `1/0` in [`ElementwiseOp::DivGuarded`].
///
/// Taking `min` against it returns the other operand, which is the
/// behaviour the minimum-volume box cut relies on.
pub const GUARDED_INFINITY: f64 = f64::MAX;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// `‖g‖²_P = Σ p[i]·g[i]²`.
pub fn weighted_sqnorm(g: &[f64], p: &DiagPreconditioner) -> Result<f64> {
    check_dim(g.len(), p.dim())?;
    Ok(g.iter().zip(p.as_slice()).map(|(gi, pi)| pi * gi * gi).sum())
}

/// `y ← x - p ⊙ g`.
pub fn preconditioned_step(x: &[f64], p: &DiagPreconditioner, g: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), p.dim())?;
    check_dim(x.len(), g.len())?;
    Ok(x.iter()
        .zip(p.as_slice())
        .zip(g)
        .map(|((xi, pi), gi)| xi - pi * gi)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Mul,
    /// `a / b`, with `b == 0` mapped to [`GUARDED_INFINITY`].
    DivGuarded,
    Min,
    Max,
    /// `a ⊙ a`; the second operand is ignored.
    Square,
}

pub fn elementwise(a: &[f64], b: &[f64], op: ElementwiseOp) -> Result<Vec<f64>> {
    if op != ElementwiseOp::Square {
        check_dim(a.len(), b.len())?;
    }
    let out = match op {
        ElementwiseOp::Square => a.iter().map(|x| x * x).collect(),
        ElementwiseOp::Mul => a.iter().zip(b).map(|(x, y)| x * y).collect(),
        ElementwiseOp::Min => a.iter().zip(b).map(|(x, y)| x.min(*y)).collect(),
        ElementwiseOp::Max => a.iter().zip(b).map(|(x, y)| x.max(*y)).collect(),
        ElementwiseOp::DivGuarded => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                if *y == 0.0 {
                    GUARDED_INFINITY
                } else {
                    (x / y).clamp(-GUARDED_INFINITY, GUARDED_INFINITY)
                }
            })
            .collect(),
    };
    Ok(out)
}

/// Non-negative per-coordinate step-sizes `p`, with `P = Diag(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagPreconditioner(Vec<f64>);

impl DiagPreconditioner {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "preconditioner entries must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self(p))
    }

    pub fn uniform(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl AsRef<[f64]> for DiagPreconditioner {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if row_offsets.len() != n_rows + 1 {
            return invalid(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            ));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return invalid("row_offsets must start at 0 and end at nnz".into());
        }
        if col_indices.len() != values.len() {
            return invalid("col_indices and values differ in length".into());
        }
        for (r, w) in row_offsets.windows(2).enumerate() {
            if w[0] > w[1] {
                return invalid(format!("row_offsets decrease at row {r}"));
            }
            let cols = &col_indices[w[0]..w[1]];
            if cols.iter().any(|&c| c >= n_cols) {
                return invalid(format!("column index out of range in row {r}"));
            }
            if cols.windows(2).any(|c| c[0] >= c[1]) {
                return invalid(format!("column indices not strictly increasing in row {r}"));
            }
        }
        if !all_finite(&values) {
            return invalid("matrix values must be finite".into());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense rows stored with every entry, zeros included.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(n_rows * n_cols);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        row_offsets.push(0);
        for row in rows {
            check_dim(n_cols, row.len())?;
            col_indices.extend(0..n_cols);
            values.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::new(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n]).expect("identity is well formed")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_cols, x.len())?;
        Ok((0..self.n_rows).map(|i| self.row_dot(i, x)).collect())
    }

    /// `Aᵀ y`.
    pub fn spmv_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_rows, y.len())?;
        let mut out = vec![0.0; self.n_cols];
        for (i, yi) in y.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                out[c] += v * yi;
            }
        }
        Ok(out)
    }

    /// Main diagonal (square or not; length `min(n_rows, n_cols)`).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                row[c] = *v;
            }
        }
        out
    }

    /// True when no stored entry lies off the main diagonal (ignoring zeros).
    pub fn is_diagonal(&self) -> bool {
        (0..self.n_rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&c, &v)| c == i || v == 0.0)
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.n_rows,
            self.n_cols,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}
