use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite {what} encountered")]
    NumericalOverflow { what: &'static str },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("labels are all identical (mean {mean}); bias initialization is undefined")]
    DegenerateLabels { mean: f64 },

    /// The hyperplane normalizer was not positive; no cut can be built.
    #[error("degenerate cut: hyperplane normalizer {denominator:e} is not positive")]
    DegenerateCut { denominator: f64 },

    /// The truncated hyperplane does not separate the probed point, or the
    /// cut would not shrink the set.
    #[error("shallow cut: depth {depth:e}")]
    ShallowCut { depth: f64 },

    #[error("gradient is zero; the iterate is stationary")]
    ZeroGradient,

    #[error("candidate set collapsed (largest semi-axis {max_semi_axis:e})")]
    SetCollapsed { max_semi_axis: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
