use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {what}")]
    NonFinite { what: String },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("unstable coefficient: max real part {max_real_part:e}")]
    Unstable { max_real_part: f64 },

    #[error("residual {residual:e} exceeds tolerance {tolerance:e} in {what}")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("singular system in {what}")]
    Singular { what: String },

    #[error(
        "Hamiltonian eigen-splitting failed: found {stable} stable eigenvalues, expected {expected}"
    )]
    RiccatiSplitting { stable: usize, expected: usize },

    #[error("ill-conditioned {what}: condition number {condition:e}")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("floating load subnetwork: load-bus admittance block is singular")]
    FloatingLoadSubnetwork,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("initial gain is not stabilizing: max real part {max_real_part:e}")]
    NotStabilizing { max_real_part: f64 },

    #[error("polishing stalled unstable: no stabilizing gain within the pattern")]
    PolishStalledUnstable,

    #[error("state {index} has no generator label")]
    UnlabeledState { index: usize },

    #[error("input {index} has no generator label")]
    UnlabeledInput { index: usize },

    #[error("channel {0}")]
    Channel(String),

    #[error("step {step} too large: |lambda|*step = {product:.3} exceeds 2, use a step below {bound:e}")]
    StepTooLarge { step: f64, product: f64, bound: f64 },

    #[error("mode selector out of range: {index} (have {available} modes)")]
    ModeSelector { index: usize, available: usize },
}

impl Error {
    /// Input errors are problems with user-provided data, as opposed to
    /// numerical failures inside a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NotSquare { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFinite { .. }
                | Error::InvalidNetwork(_)
                | Error::InvalidPartition(_)
                | Error::InvalidParameter(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::UnlabeledState { .. }
                | Error::UnlabeledInput { .. }
                | Error::Channel(_)
                | Error::ModeSelector { .. }
                | Error::StepTooLarge { .. }
                | Error::FloatingLoadSubnetwork
        )
    }
}
