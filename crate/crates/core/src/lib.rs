//! Small-signal stability certification for differential-algebraic
//! power-system models.
//!
//! The crate works on DAE models `x' = f(x, y)`, `0 = g(x, y)` whose block
//! Jacobian `J = [[A, B], [C, D]]` is affine in a vector of lifted
//! coordinates. On top of that it provides
//!
//! * logarithmic norms (matrix measures) and the dense spectral helpers
//!   ([`measures`]),
//! * the model representation, a built-in two-bus system and interval
//!   propagation of boxes ([`model`]),
//! * point and box certificates built from the generalized unreduced
//!   Jacobian `F = Z^T J` ([`certify`]),
//! * pencil spectra and analytic eigenvalue sensitivities ([`spectra`]),
//! * grid scans, Monte-Carlo area measures and regressions ([`regionscan`]).
//!
//! Data-parallel loops (box vertices, scan cells, Monte-Carlo samples) run
//! on rayon when the `parallel` feature is enabled and sequentially
//! otherwise. Results are identical either way.

pub mod certify;
pub mod error;
pub mod io;
pub mod measures;
pub mod model;
pub mod par;
pub mod regionscan;
pub mod spectra;

pub use error::{Error, Result};

pub use nalgebra::DMatrix;
pub use num_complex::Complex64;
