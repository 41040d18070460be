use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("mode count mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(&'static str),

    #[error("occupation {occupation} exceeds per-mode truncation {n_max}")]
    TruncationExceeded { occupation: usize, n_max: u8 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    /// The analytic phase POVM is only valid on the span of |0⟩ and |1⟩.
    #[error("mode {mode} carries weight {weight:.3e} on occupations of two or more photons")]
    OverOccupied { mode: usize, weight: f64 },

    #[error("quadrature grid too narrow: photon number {n} integrates to {norm}")]
    GridRangeExceeded { n: usize, norm: f64 },

    #[error("state became non-finite at step {step}; reduce dt")]
    NonFiniteState { step: usize },

    #[error("invalid pulse: {0}")]
    InvalidPulse(&'static str),

    #[error("measurement outcome has zero probability")]
    ImpossibleOutcome,
}
