use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid input (NaN profile values, mismatched traces, ...).
    #[error("input error: {0}")]
    Input(String),

    /// An invalid parameter combination detected before any computation.
    #[error("config error: {0}")]
    Config(String),

    /// The grid-refinement estimate of a singular integral keeps growing:
    /// the quantity is treated as divergent rather than reported as a number.
    #[error("divergent energy: refined-grid estimate grew by factor {ratio:.3} (cap {cap:.3})")]
    Divergent { ratio: f64, cap: f64 },

    /// The calibration search for (c1, q) found no admissible q above its floor.
    #[error("calibration failure: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
