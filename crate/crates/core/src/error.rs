use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// A profile or envelope has a divergent moment, so the curvature
    /// condition cannot be used in any constant.
    #[error("profile is not admissible: {moment} diverges ({detail})")]
    Admissibility { moment: &'static str, detail: String },

    /// The manifold fails the curvature condition against the supplied profile.
    #[error("curvature condition violated: {0}")]
    CurvatureCondition(String),

    /// The Riccati hypothesis g' + g^2 <= G (or the singular start) does not hold
    /// for the caller's curve. Distinct from a failed comparison.
    #[error("Riccati hypothesis violated at t = {t}: {detail}")]
    Hypothesis { t: f64, detail: String },

    /// The test function is not normalized, so the Neumann problem has no solution.
    #[error("Neumann data incompatible: flux residual {flux_residual:.3e} exceeds {tol:.1e}")]
    Compatibility { flux_residual: f64, tol: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:.3e}")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("integrator failure at t = {t}: {detail}")]
    Integration { t: f64, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
