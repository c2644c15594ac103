//! Multidimensional backtracking.
//!
//! Gradient descent with a per-coordinate step-size `x⁺ = x − P∇f(x)`,
//! where the diagonal `P` is found by a cutting-plane search: each
//! preconditioner that fails the Armijo test yields a hyperplane that removes
//! it, and every preconditioner at least as bad, from a box or ellipsoid of
//! candidates.
//!
//! ```
//! use mdbt::dataio::{synth_quadratic, SynthKind};
//! use mdbt::optimizers::{run, Method, RunConfig};
//!
//! let f = synth_quadratic(4, 1e4, SynthKind::Diagonal, 0).unwrap();
//! let cfg = RunConfig::new(Method::MbEllipsoid, 4);
//! let trace = run(&f, &[1.0; 4], &cfg).unwrap();
//! assert!(trace.best_f() < 1e-12);
//! ```

pub mod bench;
pub mod candidate_sets;
pub mod dataio;
pub mod error;
pub mod hyperplanes;
pub mod numkit;
pub mod objectives;
pub mod optimizers;
pub mod oracle;

pub use error::{Error, Result};
pub use numkit::{CsrMatrix, DiagPreconditioner};
pub use objectives::{Objective, OracleCounter};
pub use optimizers::{run, Method, RunConfig, RunStatus, RunTrace};
