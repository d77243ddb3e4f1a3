use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by constructors, evaluators, samplers, and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated its domain (non-positive, non-finite, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Count vector total disagrees with the total-count parameter m.
    #[error("total mismatch: counts sum to {got} but m = {expected}")]
    TotalMismatch { expected: u64, got: u64 },

    /// Density is +infinity at a simplex boundary point (concentration < 1).
    #[error("density diverges: coordinate {index} is 0 with concentration < 1")]
    DensityDiverges { index: usize },

    /// Adaptive quadrature stopped above its error target.
    #[error("quadrature did not converge: error estimate {achieved:e} > target {target:e}")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    /// Up-front guard for conditioned rejection samplers.
    #[error("conditioned sampling impractical: acceptance estimate {acceptance:e} < {floor:e}")]
    AcceptanceTooLow { acceptance: f64, floor: f64 },

    #[error("rejection budget of {cap} attempts exceeded (acceptance estimate {acceptance:e})")]
    RejectionBudgetExceeded { cap: u64, acceptance: f64 },

    /// A category is zero in every row, so its concentration is not identifiable.
    #[error("degenerate category {index}: zero in every row")]
    DegenerateCategory { index: usize },

    #[error("empty data")]
    EmptyData,

    #[error("matrix is numerically singular")]
    SingularMatrix,
}
