//! LIBSVM ingestion, bias augmentation, starting points and synthetic
//! quadratics.
//!
//! Data is never rescaled. The Gaussian initializer and the random rotations
//! draw from ChaCha8 seeded with a `u64`, so a seed reproduces the same
//! stream within a build.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::CsrMatrix;
use crate::objectives::QuadraticObjective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: CsrMatrix,
    pub y: Vec<f64>,
    pub task: Task,
    pub name: String,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }
}

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly ascending
/// indices. Blank lines and `#` comments are skipped. The column count is the
/// largest index seen.
pub fn parse_libsvm(text: &str, task: Task) -> Result<Dataset> {
    let mut y = Vec::new();
    let mut row_offsets = vec![0];
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    let mut n_cols = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("bad label `{label_tok}`")))?;
        let label = match task {
            Task::Regression => label,
            Task::Classification => match label {
                l if l == 1.0 => 1.0,
                l if l == 0.0 || l == -1.0 => 0.0,
                l => return Err(err(format!("classification label {l} not in {{-1, 0, 1}}"))),
            },
        };
        if !label.is_finite() {
            return Err(err("label is not finite".into()));
        }

        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad feature index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad feature value `{val}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based; got 0".into()));
            }
            if !val.is_finite() {
                return Err(err(format!("feature {idx} is not finite")));
            }
            if let Some(p) = prev {
                if idx == p {
                    return Err(err(format!("duplicate feature index {idx}")));
                }
                if idx < p {
                    return Err(err(format!("feature index {idx} follows {p}; not ascending")));
                }
            }
            prev = Some(idx);
            col_indices.push(idx - 1);
            values.push(val);
            n_cols = n_cols.max(idx);
        }
        y.push(label);
        row_offsets.push(col_indices.len());
    }

    let x = CsrMatrix::new(y.len(), n_cols, row_offsets, col_indices, values)?;
    Ok(Dataset {
        x,
        y,
        task,
        name: String::new(),
    })
}

pub fn read_libsvm(path: &Path, task: Task) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ds = parse_libsvm(&text, task)?;
    ds.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ds)
}

/// Inverse of [`parse_libsvm`] for the stored entries. Classification labels
/// are written as 0/1.
pub fn to_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for (i, label) in ds.y.iter().enumerate() {
        write!(out, "{label}").unwrap();
        let (cols, vals) = ds.x.row(i);
        for (c, v) in cols.iter().zip(vals) {
            write!(out, " {}:{v}", c + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Prepends an all-ones column; existing columns shift right by one.
pub fn prepend_bias(ds: &Dataset) -> Dataset {
    let x = &ds.x;
    let mut row_offsets = Vec::with_capacity(x.n_rows() + 1);
    let mut col_indices = Vec::with_capacity(x.nnz() + x.n_rows());
    let mut values = Vec::with_capacity(x.nnz() + x.n_rows());
    row_offsets.push(0);
    for i in 0..x.n_rows() {
        let (cols, vals) = x.row(i);
        col_indices.push(0);
        values.push(1.0);
        col_indices.extend(cols.iter().map(|c| c + 1));
        values.extend_from_slice(vals);
        row_offsets.push(col_indices.len());
    }
    let x = CsrMatrix::new(x.n_rows(), x.n_cols() + 1, row_offsets, col_indices, values)
        .expect("shifting a valid CSR keeps it valid");
    Dataset {
        x,
        y: ds.y.clone(),
        task: ds.task,
        name: ds.name.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitSpec {
    /// Zeros, with the bias weight at the unregularized MLE.
    Bias,
    /// `w ~ N(0, I)`.
    Gaussian { seed: u64 },
}

impl InitSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitSpec::Bias => None,
            InitSpec::Gaussian { seed } => Some(*seed),
        }
    }
}

pub fn gaussian_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn initialize(ds: &Dataset, spec: InitSpec) -> Result<Vec<f64>> {
    let d = ds.n_features();
    match spec {
        InitSpec::Gaussian { seed } => Ok(gaussian_vector(d, seed)),
        InitSpec::Bias => {
            let has_bias = d > 0
                && (0..ds.x.n_rows()).all(|i| {
                    let (cols, vals) = ds.x.row(i);
                    cols.first() == Some(&0) && vals[0] == 1.0
                });
            if !has_bias {
                return Err(Error::InvalidArgument(
                    "bias initialization needs a leading all-ones column".into(),
                ));
            }
            let mean = ds.y.iter().sum::<f64>() / ds.y.len() as f64;
            let w0 = match ds.task {
                Task::Regression => mean,
                Task::Classification => {
                    if mean <= 0.0 || mean >= 1.0 {
                        return Err(Error::DegenerateLabels { mean });
                    }
                    (mean / (1.0 - mean)).ln()
                }
            };
            let mut w = vec![0.0; d];
            w[0] = w0;
            Ok(w)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Diagonal,
    Rotated,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(SynthKind::Diagonal),
            "rotated" => Ok(SynthKind::Rotated),
            other => Err(Error::InvalidArgument(format!("unknown synth kind `{other}`"))),
        }
    }
}

/// Eigenvalues log-spaced from 1 to `cond`. A single coordinate gets `cond`.
pub fn log_spectrum(d: usize, cond: f64) -> Vec<f64> {
    if d == 1 {
        return vec![cond];
    }
    (0..d)
        .map(|i| cond.powf(i as f64 / (d - 1) as f64))
        .collect()
}

/// Orthogonal matrix from modified Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for u in &q {
            let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        // a near-dependent draw is simply redrawn
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
        }
    }
    q
}

/// Quadratic `½⟨x, Ax⟩` with spectrum [`log_spectrum`]; `Rotated` conjugates
/// the diagonal by a seeded rotation.
pub fn synth_quadratic(d: usize, cond: f64, kind: SynthKind, seed: u64) -> Result<QuadraticObjective> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(cond >= 1.0 && cond.is_finite()) {
        return Err(Error::InvalidArgument(format!("condition number {cond} must be ≥ 1")));
    }
    let eig = log_spectrum(d, cond);
    let a = match kind {
        SynthKind::Diagonal => CsrMatrix::from_diagonal(&eig)?,
        SynthKind::Rotated => {
            let q = random_rotation(d, seed);
            let mut dense = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in i..d {
                    let v: f64 = (0..d).map(|k| q[k][i] * eig[k] * q[k][j]).sum();
                    dense[i][j] = v;
                    dense[j][i] = v;
                }
            }
            CsrMatrix::from_dense(&dense)?
        }
    };
    QuadraticObjective::new(a)
}
