//! Photonic qubit simulation in truncated Fock space.
//!
//! The crate models single-rail qubits (vacuum / one photon in one mode) and
//! dual-rail qubits (one photon shared between two modes), the linear optics
//! acting on them, and three kinds of measurement: photon counting, homodyne
//! quadrature detection, and the adaptive phase measurement (APM) realised by
//! dyne detection with real-time feedback on the local-oscillator phase.
//!
//! The APM is provided twice:
//!
//! * [`measurement`] samples it from its closed-form POVM
//!   `|θ⟩⟨θ| / 2π` with `|θ⟩ = |0⟩ + e^{iθ}|1⟩`, valid when the measured mode
//!   holds at most one photon;
//! * [`trajectory`] integrates the conditional state of a pulsed mode under
//!   continuous dyne detection, with the local-oscillator phase driven by the
//!   integrated photocurrent.
//!
//! [`protocols`] composes both into deterministic state preparation, the
//! dual-to-single rail conversion, and the teleported single-rail gate.
//!
//! The crate is `no_std` and only needs `alloc`. Randomness is always supplied
//! by the caller, so ensembles are reproducible given the caller's seeding.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod fock;
pub mod linear_optics;
pub mod measurement;
pub mod protocols;
pub mod trajectory;

mod math;

pub use error::{Error, Result};
pub use fock::{FockBasis, ModeIndex, PureState, Truncation};
pub use linear_optics::{BeamsplitterSpec, DualRailQubit, Matrix2, SingleRailQubit};
pub use measurement::{MeasurementOutcome, OutcomeKind, QuadratureGrid};
pub use protocols::{Backend, BsmOutcome, GateOutcome, PrepSpec};
pub use trajectory::{FeedbackPolicy, PhaseLaw, PulseKind, PulseShape, TrajectoryRecord};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
