#![allow(dead_code)]

use mdbt::dataio::{log_spectrum, random_rotation};
use mdbt::objectives::{Objective, QuadraticObjective};
use mdbt::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A = S·QΛQᵀ·S` with a rotated log-spectrum of condition `cond` and a
/// diagonal scaling `S` spanning four decades, so `κ(A)` is large while
/// `κ*` stays near `cond`.
pub fn badly_scaled_quadratic(rng: &mut ChaCha8Rng, d: usize, cond: f64) -> QuadraticObjective {
    let q = random_rotation(d, rng.random());
    let lam = log_spectrum(d, cond);
    let s: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let core: f64 = (0..d).map(|k| q[k][i] * lam[k] * q[k][j]).sum();
            a[i][j] = s[i] * core * s[j];
        }
    }
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
    QuadraticObjective::new(CsrMatrix::from_dense(&a).unwrap()).unwrap()
}

/// Central differences with step `h`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let num = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn value_of<'a>(obj: &'a dyn Objective) -> impl Fn(&[f64]) -> f64 + 'a {
    move |x| obj.compute_value(x)
}
