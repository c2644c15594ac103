//! Ground truth for small quadratics: `L`, validity of a diagonal
//! preconditioner, and the optimal diagonal preconditioner `p*` with its
//! condition number `κ*`.
//!
//! Everything here works on dense copies and a cyclic Jacobi eigen-solver,
//! so it is meant for `d ≤ 64` (eigenvalues) and `d ≤ 6` (the search).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkit::{CsrMatrix, DiagPreconditioner};

pub const MAX_EIGEN_DIM: usize = 64;
pub const MAX_SEARCH_DIM: usize = 6;
/// Slack on `λ_max(P^½AP^½) ≤ 1`; the boundary counts as valid.
pub const VALIDITY_TOLERANCE: f64 = 1e-9;

const RESTARTS: usize = 8;
const RESTART_SEED: u64 = 0x5eed;
const SEARCH_HALF_WIDTH: f64 = 6.0 * std::f64::consts::LN_10;
const GOLDEN_ITERS: usize = 80;
const MAX_ROUNDS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondMethod {
    ClosedFormDiagonal,
    NumericSearch,
}

impl fmt::Display for PrecondMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecondMethod::ClosedFormDiagonal => "closed_form_diagonal",
            PrecondMethod::NumericSearch => "numeric_search",
        })
    }
}

#[derive(Debug, Clone)]
pub struct OptimalPrecondReport {
    /// Scaled so that `λ_max(P*^½ A P*^½) = 1`.
    pub p_star: DiagPreconditioner,
    /// `+∞` when `A` is singular.
    pub kappa_star: f64,
    pub method: PrecondMethod,
    /// `|λ_max(P*^½ A P*^½) − 1|`.
    pub residual: f64,
    /// Best `κ` on the log-space grid, when the cross-check ran (`d ≤ 3`).
    pub grid_kappa: Option<f64>,
}

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
/// Only the upper triangle is read.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { a[i][j] } else { a[j][i] }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn dense_symmetric(a: &CsrMatrix, max_dim: usize) -> Result<Vec<Vec<f64>>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            actual: a.n_cols(),
        });
    }
    if a.n_rows() > max_dim {
        return Err(Error::InvalidArgument(format!(
            "dimension {} exceeds the dense limit {max_dim}",
            a.n_rows()
        )));
    }
    let m = a.to_dense();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let asym = (0..m.len())
        .flat_map(|i| (0..m.len()).map(move |j| (i, j)))
        .fold(0.0f64, |s, (i, j)| s.max((m[i][j] - m[j][i]).abs()));
    if asym > 1e-12 * scale {
        return Err(Error::NonSymmetric(asym));
    }
    Ok(m)
}

/// `λ_max(A)`.
pub fn smoothness_l(a: &CsrMatrix) -> Result<f64> {
    let m = dense_symmetric(a, MAX_EIGEN_DIM)?;
    Ok(jacobi_eigenvalues(&m).last().copied().unwrap_or(0.0))
}

fn scaled(a: &[Vec<f64>], p: &[f64]) -> Vec<Vec<f64>> {
    let r: Vec<f64> = p.iter().map(|v| v.max(0.0).sqrt()).collect();
    a.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, v)| r[i] * v * r[j]).collect())
        .collect()
}

/// `(λ_min, λ_max)` of `P^½ A P^½` for a dense symmetric `A`.
pub fn scaled_extreme_eigenvalues(a: &[Vec<f64>], p: &[f64]) -> (f64, f64) {
    let vals = jacobi_eigenvalues(&scaled(a, p));
    (vals[0], vals[vals.len() - 1])
}

/// `κ(P^½ A P^½)`, `+∞` when the smallest eigenvalue is not positive.
pub fn condition_number(a: &[Vec<f64>], p: &[f64]) -> f64 {
    let (lo, hi) = scaled_extreme_eigenvalues(a, p);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `λ_max(P^½ A P^½) ≤ 1 + 1e−9`. Non-square or mismatched input is invalid.
pub fn is_valid_preconditioner(a: &CsrMatrix, p: &[f64]) -> bool {
    if a.n_rows() != a.n_cols() || a.n_rows() != p.len() || p.iter().any(|v| !(*v >= 0.0)) {
        return false;
    }
    let (_, hi) = scaled_extreme_eigenvalues(&a.to_dense(), p);
    hi <= 1.0 + VALIDITY_TOLERANCE
}

/// Minimizes `κ(P^½AP^½)` over positive diagonal `P`.
///
/// Diagonal `A` uses `p* = 1/diag(A)`. Otherwise the search runs in
/// `s = log(p·diag(A))` from 8 seeded starts, with golden-section line
/// searches along the coordinate axes and random directions, halving the
/// bracket whenever a round improves `log κ` by less than `tol`. The result
/// is scaled to `λ_max = 1`. Singular PSD input is searched on `A + εI` and
/// reported with `κ* = +∞`.
pub fn optimal_diag_precond(a: &CsrMatrix, tol: f64) -> Result<OptimalPrecondReport> {
    let m = dense_symmetric(a, MAX_EIGEN_DIM)?;
    let d = m.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let vals = jacobi_eigenvalues(&m);
    let (lo, hi) = (vals[0], vals[d - 1]);
    if hi <= 0.0 || lo < -1e-10 * hi {
        return Err(Error::NotPsd(lo));
    }
    let singular = lo <= 1e-12 * hi;
    let diag: Vec<f64> = (0..d).map(|i| m[i][i]).collect();

    if a.is_diagonal() {
        if singular {
            return Err(Error::Unsupported("diagonal matrix with a zero entry"));
        }
        let p: Vec<f64> = diag.iter().map(|v| 1.0 / v).collect();
        return finish(&m, p, PrecondMethod::ClosedFormDiagonal, 1.0, None);
    }
    if d > MAX_SEARCH_DIM {
        return Err(Error::InvalidArgument(format!(
            "numeric preconditioner search supports d <= {MAX_SEARCH_DIM}, got {d}"
        )));
    }

    // unit-diagonal form: B = D^{-½}(A + εI)D^{-½}, then p = e^s / diag(A)
    let eps = if singular { 1e-6 * hi } else { 0.0 };
    let b: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let v = m[i][j] + if i == j { eps } else { 0.0 };
                    v / (diag[i] + eps).sqrt() / (diag[j] + eps).sqrt()
                })
                .collect()
        })
        .collect();
    let tol = tol.max(1e-14);
    let starts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
        (0..RESTARTS)
            .map(|k| {
                if k == 0 {
                    vec![0.0; d]
                } else {
                    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
                }
            })
            .collect()
    };
    let best = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, s0)| search_from(&b, s0, tol, RESTART_SEED + 1 + k as u64))
        .reduce_with(|x, y| if y.1 < x.1 { y } else { x })
        .expect("at least one restart");
    let to_p = |s: &[f64]| -> Vec<f64> {
        s.iter().zip(&diag).map(|(si, di)| si.exp() / (di + eps)).collect()
    };
    let mut p = to_p(&best.0);
    let grid_kappa = if d <= 3 {
        let (g_s, g_kappa) = grid_search(&b, 41, 6.0);
        if g_kappa.ln() < best.1 {
            p = to_p(&g_s);
        }
        Some(if singular { f64::INFINITY } else { g_kappa })
    } else {
        None
    };
    let kappa = if singular { f64::INFINITY } else { condition_number(&m, &p) };
    finish(&m, p, PrecondMethod::NumericSearch, kappa, grid_kappa)
}

fn finish(
    m: &[Vec<f64>],
    p: Vec<f64>,
    method: PrecondMethod,
    kappa_star: f64,
    grid_kappa: Option<f64>,
) -> Result<OptimalPrecondReport> {
    let (_, hi) = scaled_extreme_eigenvalues(m, &p);
    let p: Vec<f64> = p.iter().map(|v| v / hi).collect();
    let (_, hi) = scaled_extreme_eigenvalues(m, &p);
    Ok(OptimalPrecondReport {
        p_star: DiagPreconditioner::new(p)?,
        kappa_star,
        method,
        residual: (hi - 1.0).abs(),
        grid_kappa,
    })
}

fn log_kappa(b: &[Vec<f64>], s: &[f64]) -> f64 {
    let p: Vec<f64> = s.iter().map(|v| v.exp()).collect();
    condition_number(b, &p).ln()
}

fn golden_along(b: &[Vec<f64>], s: &[f64], dir: &[f64], half_width: f64) -> (f64, f64) {
    let at = |t: f64| {
        let x: Vec<f64> = s.iter().zip(dir).map(|(si, di)| si + t * di).collect();
        log_kappa(b, &x)
    };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-half_width, half_width);
    let mut c = hi - r * (hi - lo);
    let mut e = lo + r * (hi - lo);
    let (mut fc, mut fe) = (at(c), at(e));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - r * (hi - lo);
            fc = at(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + r * (hi - lo);
            fe = at(e);
        }
        if hi - lo < (1e-4 * half_width).max(1e-12) {
            break;
        }
    }
    if fc <= fe {
        (c, fc)
    } else {
        (e, fe)
    }
}

/// Local search in log-space; returns `(s, log κ)`.
fn search_from(b: &[Vec<f64>], mut s: Vec<f64>, tol: f64, seed: u64) -> (Vec<f64>, f64) {
    let d = s.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = log_kappa(b, &s);
    let mut width = SEARCH_HALF_WIDTH;
    for _ in 0..MAX_ROUNDS {
        let start = f;
        let mut dirs: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..d {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-8 {
                dirs.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        for dir in &dirs {
            let (t, ft) = golden_along(b, &s, dir, width);
            if ft < f {
                s.iter_mut().zip(dir).for_each(|(si, di)| *si += t * di);
                f = ft;
            }
        }
        if start - f < tol {
            width *= 0.5;
            if width < 1e-10 {
                break;
            }
        }
    }
    (s, f)
}

/// Exhaustive search over `n` log-spaced values per axis across
/// `±decades` around the unit-diagonal scaling; returns `(s, κ)`.
fn grid_search(b: &[Vec<f64>], n: usize, decades: f64) -> (Vec<f64>, f64) {
    let d = b.len();
    let axis: Vec<f64> = (0..n)
        .map(|k| (-decades + 2.0 * decades * k as f64 / (n - 1) as f64) * std::f64::consts::LN_10)
        .collect();
    let total = n.pow(d as u32);
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let s: Vec<f64> = (0..d)
                .map(|_| {
                    let v = axis[idx % n];
                    idx /= n;
                    v
                })
                .collect();
            let p: Vec<f64> = s.iter().map(|v| v.exp()).collect();
            let k = condition_number(b, &p);
            (s, k)
        })
        .reduce_with(|x, y| if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x })
        .expect("non-empty grid")
}

/// Best `κ` over the same log-spaced grid, in the coordinates of `A`
/// (centered on `1/diag(A)`). For cross-checks at `d ≤ 3`.
pub fn grid_kappa(a: &CsrMatrix, points_per_axis: usize, decades: f64) -> Result<(Vec<f64>, f64)> {
    let m = dense_symmetric(a, MAX_SEARCH_DIM)?;
    let diag: Vec<f64> = (0..m.len()).map(|i| m[i][i]).collect();
    if diag.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NotPsd(diag.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    let b: Vec<Vec<f64>> = (0..m.len())
        .map(|i| (0..m.len()).map(|j| m[i][j] / (diag[i] * diag[j]).sqrt()).collect())
        .collect();
    let (s, k) = grid_search(&b, points_per_axis.max(2), decades);
    Ok((s.iter().zip(&diag).map(|(si, di)| si.exp() / di).collect(), k))
}

/// Parses a dense matrix: one row per line, whitespace-separated, `#`
/// comments and blank lines ignored.
pub fn parse_dense_matrix(text: &str) -> Result<CsrMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {} entries, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no matrix rows".into(),
        });
    }
    if rows.len() != rows[0].len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: rows[0].len(),
        });
    }
    CsrMatrix::from_dense(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> CsrMatrix {
        CsrMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn smoothness_fixtures() {
        assert_eq!(smoothness_l(&CsrMatrix::from_diagonal(&[1.0, 100.0]).unwrap()).unwrap(), 100.0);
        let l = smoothness_l(&dense(&[&[1.0, -1.0], &[-1.0, 1.0]])).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        // 2×2 closed form: (tr + √(tr² − 4 det)) / 2
        let (tr, det) = (1.5f64, 0.5 - 0.01);
        let want = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        let l = smoothness_l(&dense(&[&[0.5, 0.1], &[0.1, 1.0]])).unwrap();
        assert!((l - want).abs() <= 1e-10 * want);
        assert!((l - 1.0193).abs() < 1e-4);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = dense(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(smoothness_l(&a), Err(Error::NonSymmetric(_))));
        assert!(matches!(optimal_diag_precond(&a, 1e-8), Err(Error::NonSymmetric(_))));
    }

    #[test]
    fn indefinite_input_is_rejected() {
        let a = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(optimal_diag_precond(&a, 1e-8), Err(Error::NotPsd(_))));
    }

    #[test]
    fn validity_fixtures() {
        let a = dense(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert!(is_valid_preconditioner(&a, &[1.0, 0.0]));
        assert!(is_valid_preconditioner(&a, &[0.0, 1.0]));
        assert!(is_valid_preconditioner(&a, &[0.5, 0.5]));
        assert!(!is_valid_preconditioner(&a, &[1.0, 1.0]));
        assert!(!is_valid_preconditioner(&a, &[1.0]));
    }

    #[test]
    fn diagonal_closed_form() {
        let a = CsrMatrix::from_diagonal(&[1.0, 100.0]).unwrap();
        let r = optimal_diag_precond(&a, 1e-10).unwrap();
        assert_eq!(r.method, PrecondMethod::ClosedFormDiagonal);
        assert_eq!(r.p_star.as_slice(), &[1.0, 0.01]);
        assert_eq!(r.kappa_star, 1.0);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn coupled_two_by_two() {
        let a = dense(&[&[0.5, 0.1], &[0.1, 1.0]]);
        let r = optimal_diag_precond(&a, 1e-10).unwrap();
        let p = r.p_star.as_slice();
        assert!((p[0] - 1.75).abs() <= 0.05 && (p[1] - 0.87).abs() <= 0.05, "{p:?}");
        // for 2×2 the optimum is the unit-diagonal scaling
        let c = 0.1 / (0.5f64).sqrt();
        let want = (1.0 + c) / (1.0 - c);
        assert!((r.kappa_star - want).abs() <= 1e-6 * want);
        assert!(r.residual < 1e-12);
        assert!(r.kappa_star <= r.grid_kappa.unwrap() * (1.0 + 1e-3));
    }

    #[test]
    fn singular_symmetric_gets_uniform_preconditioner() {
        let a = dense(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let r = optimal_diag_precond(&a, 1e-10).unwrap();
        let p = r.p_star.as_slice();
        assert!((p[0] - 0.5).abs() < 1e-4 && (p[1] - 0.5).abs() < 1e-4, "{p:?}");
        assert!(r.kappa_star.is_infinite());
    }

    #[test]
    fn certificate_is_maximal() {
        let a = dense(&[&[2.0, 0.3, 0.1], &[0.3, 1.0, -0.2], &[0.1, -0.2, 0.5]]);
        let tol = 1e-8;
        let r = optimal_diag_precond(&a, tol).unwrap();
        let p = r.p_star.as_slice();
        assert!(is_valid_preconditioner(&a, p));
        let bigger: Vec<f64> = p.iter().map(|v| v * (1.0 + 2.0 * tol.max(1e-6))).collect();
        assert!(!is_valid_preconditioner(&a, &bigger));
        assert!(r.kappa_star <= r.grid_kappa.unwrap() * (1.0 + 1e-3));
    }

    #[test]
    fn scale_covariance() {
        let a = dense(&[&[2.0, 0.3, 0.1], &[0.3, 1.0, -0.2], &[0.1, -0.2, 0.5]]);
        let base = optimal_diag_precond(&a, 1e-10).unwrap();
        for c in [0.1, 10.0] {
            let r = optimal_diag_precond(&a.scaled(c).unwrap(), 1e-10).unwrap();
            assert!((r.kappa_star - base.kappa_star).abs() <= 1e-6 * base.kappa_star);
            for (x, y) in r.p_star.as_slice().iter().zip(base.p_star.as_slice()) {
                assert!((x * c - y).abs() <= 1e-5 * y, "{x} {y} {c}");
            }
        }
    }

    #[test]
    fn jacobi_agrees_with_two_by_two_formula() {
        let vals = jacobi_eigenvalues(&[vec![3.0, 1.0], vec![1.0, 3.0]]);
        assert!((vals[0] - 2.0).abs() < 1e-14 && (vals[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn dense_matrix_parser() {
        let m = parse_dense_matrix("# Fig\n0.5 0.1\n\n0.1 1.0 # row 2\n").unwrap();
        assert_eq!(m.to_dense(), vec![vec![0.5, 0.1], vec![0.1, 1.0]]);
        assert!(matches!(parse_dense_matrix("1 2\n3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_dense_matrix("1 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_dense_matrix("1 2\n").is_err());
    }
}
