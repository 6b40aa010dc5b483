use thiserror::Error;

/// Errors reported by solver and diagnostic routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; the message names the offending value.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two fields that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A coefficient array does not satisfy conjugate symmetry, so it cannot
    /// represent real-valued samples.
    #[error("conjugate symmetry violated: max deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    SymmetryViolation { deviation: f64, tolerance: f64 },

    /// A field required to be even in the vertical coordinate carries odd
    /// content above tolerance.
    #[error("odd-parity content {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    ParityViolation { deviation: f64, tolerance: f64 },

    /// A velocity field required to be divergence-free is not.
    #[error("divergence norm {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    DivergenceViolation { deviation: f64, tolerance: f64 },

    /// The vertical-average of the horizontal divergence is nonzero, so no
    /// vertical velocity with vanishing boundary values exists.
    #[error("vertical average of horizontal divergence has norm {deviation:.3e}, tolerance {tolerance:.3e}")]
    ColumnBalanceViolation { deviation: f64, tolerance: f64 },

    /// A negative operator power was applied to a field with content on modes
    /// where the symbol vanishes (the operator is not invertible there).
    #[error("operator symbol vanishes on a mode carrying coefficient magnitude {magnitude:.3e}; negative powers are undefined there")]
    NotInvertible { magnitude: f64 },

    /// Unforced kinetic energy grew past the configured guard factor.
    #[error("blow-up guard tripped at t = {time}: kinetic energy {kinetic:.6e} exceeds {factor} times the initial value")]
    BlowUp { time: f64, kinetic: f64, factor: f64 },

    /// A non-finite value appeared during time stepping.
    #[error("non-finite field values at t = {time}")]
    NonFinite { time: f64 },

    /// An inequality that holds identically for correct norm weights was
    /// violated; this is a canary for a corrupted weight table.
    #[error("inequality '{inequality}' violated: worst relative margin {margin:.3e}")]
    EstimateViolation {
        inequality: &'static str,
        margin: f64,
    },

    /// Two trajectories that must share snapshot times or configuration for a
    /// comparison do not.
    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    /// Checkpoint file contents disagree with their manifest.
    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
