use thiserror::Error;

/// Failures raised by the toolkit. Instability itself is never an error;
/// it is reported through certificates and classifications.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Singular algebraic block; the reduced system is undefined.
    #[error("algebraic block is singular (condition number {cond:.3e})")]
    SingularAlgebraic { cond: f64 },

    #[error("certificate construction failed: {0}")]
    Certificate(String),

    #[error("reduced Jacobian is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotCertifiable { abscissa: f64 },

    #[error("epsilon search exhausted; final zeta {zeta:.6e}")]
    SearchExhausted { zeta: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error("eigenvalues not simple (gap {gap:.3e}); sensitivity undefined")]
    Multiplicity { gap: f64 },

    #[error("degenerate normalization |u^T E v| = {0:.3e}")]
    DegenerateNormalization(f64),

    #[error("degenerate regression: regressor has zero variance")]
    DegenerateFit,

    #[error("vertex budget exceeded: {coords} free lifted coordinates (max {max}); pin some coordinates")]
    VertexBudget { coords: usize, max: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
