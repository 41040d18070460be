//! State preparation, rail conversion and the teleported single-rail gate.
//!
//! Every protocol takes a [`Backend`] that decides how the adaptive phase
//! measurement (and homodyne detection) is carried out: sampled from the
//! closed-form POVM, or integrated as a dyne trajectory.
//!
//! Bell measurement on single-rail modes `(m1, m2)` is a balanced beamsplitter
//! followed by photon counting. Under the beamsplitter convention of
//! [`crate::linear_optics`], the outcomes and corrections are:
//!
//! | counts `(m1, m2)` | outcome     | correction on the dual-rail output |
//! |-------------------|-------------|------------------------------------|
//! | `(1, 0)`          | `BellPlus`  | none                               |
//! | `(0, 1)`          | `BellMinus` | logical Z                          |
//! | `(0, 0)`          | `FailZero`  | qubit collapsed to logical 1       |
//! | two photons       | `FailTwo`   | qubit collapsed to logical 0       |

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{ModeIndex, PureState};
use crate::linear_optics::{
    beamsplitter, dual_rail_bell, dual_rail_unitary, dual_rail_z, BeamsplitterSpec, DualRailQubit, Matrix2,
    SingleRailQubit,
};
use crate::measurement::{
    apm_density, apm_sample, check_single_photon_support, homodyne_sample, photon_count, HomodyneSampler,
    MeasurementOutcome, OutcomeKind, QuadratureGrid,
};
use crate::math::cis;
use crate::trajectory::{simulate_dyne, FeedbackPolicy, PulseShape};
use crate::C64;

/// Target `α|0⟩ + e^{−iφ}√(1−α²)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrepSpec {
    alpha: f64,
    phi: f64,
}

impl PrepSpec {
    pub fn new(alpha: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]"));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("phi must be finite"));
        }
        Ok(PrepSpec { alpha, phi })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn target(&self) -> PureState {
        let beta = Float::sqrt((1.0 - self.alpha * self.alpha).max(0.0));
        SingleRailQubit::encode(C64::new(self.alpha, 0.0), cis(-self.phi) * beta).expect("one-mode qubit")
    }
}

/// How phase and quadrature measurements are performed.
#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    /// Sample the closed-form POVM.
    Analytic,
    /// Integrate dyne trajectories over `pulse`, feedback lagging by
    /// `delay_steps`.
    Trajectory { pulse: PulseShape, delay_steps: usize },
}

impl Backend {
    /// Adaptive phase measurement of `mode`. The reported density is always
    /// the analytic `p(θ)` of the input at the sampled `θ`.
    pub fn apm<R: Rng + ?Sized>(&self, s: &PureState, mode: ModeIndex, rng: &mut R) -> Result<MeasurementOutcome> {
        match self {
            Backend::Analytic => apm_sample(s, mode, rng),
            Backend::Trajectory { pulse, delay_steps } => {
                check_single_photon_support(s, mode)?;
                let density = apm_density(s, mode)?;
                let policy = FeedbackPolicy::adaptive().with_delay(*delay_steps);
                let (rec, posterior) = simulate_dyne(s, mode, pulse, policy, rng, false)?;
                Ok(MeasurementOutcome {
                    kind: OutcomeKind::Apm { theta: rec.theta },
                    posterior,
                    density: density.eval(rec.theta),
                })
            }
        }
    }

    /// Homodyne detection of `mode` at phase `phi`. The trajectory variant
    /// reports the integrated current as the outcome.
    pub fn homodyne<R: Rng + ?Sized>(
        &self,
        s: &PureState,
        mode: ModeIndex,
        phi: f64,
        grid: &QuadratureGrid,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        match self {
            Backend::Analytic => homodyne_sample(s, mode, phi, grid, rng),
            Backend::Trajectory { pulse, delay_steps } => {
                let sampler = HomodyneSampler::new(s, mode, phi, grid)?;
                let policy = FeedbackPolicy::homodyne(phi).with_delay(*delay_steps);
                let (rec, posterior) = simulate_dyne(s, mode, pulse, policy, rng, false)?;
                Ok(MeasurementOutcome {
                    kind: OutcomeKind::Homodyne { x: rec.x, phi },
                    posterior,
                    density: sampler.density(rec.x),
                })
            }
        }
    }
}

fn apm_theta(o: &MeasurementOutcome) -> f64 {
    match o.kind {
        OutcomeKind::Apm { theta } => theta,
        _ => unreachable!("phase measurement returns a phase"),
    }
}

/// Result of a deterministic preparation.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub state: PureState,
    /// Phase measurement result that was corrected for.
    pub theta: f64,
}

/// `(|0⟩ + |1⟩)/√2` from a single photon: split it, phase-measure one arm,
/// and undo the random phase on the other.
pub fn prepare_plus<R: Rng + ?Sized>(backend: &Backend, rng: &mut R) -> Result<Prepared> {
    let s = PureState::fock(&[1, 0])?;
    let s = beamsplitter(&s, &BeamsplitterSpec::balanced(ModeIndex(0), ModeIndex(1))?)?;
    let out = backend.apm(&s, ModeIndex(0), rng)?;
    let theta = apm_theta(&out);
    // the other arm is left in |0⟩ + e^{iθ}|1⟩
    let state = out.posterior.apply_phase(ModeIndex(0), -theta)?;
    Ok(Prepared { state, theta })
}

/// Arbitrary single-rail state: split with reflectivity `α²`, phase-measure
/// the reflected port and rotate the transmitted one.
pub fn prepare_arbitrary<R: Rng + ?Sized>(spec: PrepSpec, backend: &Backend, rng: &mut R) -> Result<Prepared> {
    let eta = spec.alpha * spec.alpha;
    let s = PureState::fock(&[1, 0])?;
    let s = beamsplitter(&s, &BeamsplitterSpec::new(ModeIndex(0), ModeIndex(1), eta)?)?;
    let out = backend.apm(&s, ModeIndex(0), rng)?;
    let theta = apm_theta(&out);
    // transmitted mode: α|0⟩ + e^{iθ}√(1−α²)|1⟩
    let state = out.posterior.apply_phase(ModeIndex(0), -(spec.phi + theta))?;
    Ok(Prepared { state, theta })
}

/// Homodyne instead of phase measurement on a split photon: the phase is
/// known but the amplitude is random, `∝ x|0⟩ + |1⟩`.
pub fn homodyne_prep_comparison<R: Rng + ?Sized>(
    backend: &Backend,
    grid: &QuadratureGrid,
    rng: &mut R,
) -> Result<(f64, PureState)> {
    let s = PureState::fock(&[1, 0])?;
    let s = beamsplitter(&s, &BeamsplitterSpec::balanced(ModeIndex(0), ModeIndex(1))?)?;
    let out = backend.homodyne(&s, ModeIndex(0), 0.0, grid, rng)?;
    let x = match out.kind {
        OutcomeKind::Homodyne { x, .. } => x,
        _ => unreachable!("homodyne returns a quadrature"),
    };
    Ok((x, out.posterior))
}

/// The conditional state `(x|0⟩ + |1⟩)/√(1+x²)`.
pub fn homodyne_prep_target(x: f64) -> PureState {
    let n = Float::sqrt(1.0 + x * x);
    SingleRailQubit::encode(C64::new(x / n, 0.0), C64::new(1.0 / n, 0.0)).expect("one-mode qubit")
}

/// `e^{−x²/2}(1+x²) / (2√(2π))`, the outcome density of
/// [`homodyne_prep_comparison`].
pub fn homodyne_prep_density(x: f64) -> f64 {
    Float::exp(-0.5 * x * x) * (1.0 + x * x) / (2.0 * Float::sqrt(2.0 * core::f64::consts::PI))
}

fn check_rails(s: &PureState, q: &DualRailQubit) -> Result<()> {
    s.check_mode(q.rail0)?;
    s.check_mode(q.rail1)?;
    let norm = s.norm_sqr();
    let weight: f64 = s
        .iter()
        .filter(|(k, _)| k.get(q.rail0.0) + k.get(q.rail1.0) >= 2)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        / norm;
    if weight > crate::measurement::OVER_OCCUPIED_EPS {
        return Err(Error::OverOccupied {
            mode: q.rail0.0,
            weight,
        });
    }
    Ok(())
}

/// Map a dual-rail qubit onto its `rail0` mode as a single-rail qubit with
/// the same logical amplitudes. `rail1` is consumed by the phase
/// measurement. Returns the new state, the qubit and the measured phase.
pub fn dual_to_single<R: Rng + ?Sized>(
    s: &PureState,
    q: &DualRailQubit,
    backend: &Backend,
    rng: &mut R,
) -> Result<(PureState, SingleRailQubit, f64)> {
    check_rails(s, q)?;
    let out = backend.apm(s, q.rail1, rng)?;
    let theta = apm_theta(&out);
    let rail0 = if q.rail1.0 < q.rail0.0 {
        ModeIndex(q.rail0.0 - 1)
    } else {
        q.rail0
    };
    let state = out.posterior.apply_phase(rail0, -theta)?;
    Ok((state, SingleRailQubit::new(rail0), theta))
}

/// Hybrid entanglement between single-rail and dual-rail encodings.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridBell {
    /// `(|0⟩|10⟩ + |1⟩|01⟩)/√2` on modes 0, 1, 2.
    pub state: PureState,
    pub single: SingleRailQubit,
    pub dual: DualRailQubit,
    pub theta: f64,
}

/// The single-rail logical value is anti-correlated with the dual-rail one:
/// `|0⟩|1_L⟩ + |1⟩|0_L⟩` with rails `(1, 2)`.
pub fn hybrid_bell<R: Rng + ?Sized>(backend: &Backend, rng: &mut R) -> Result<HybridBell> {
    let bell = dual_rail_bell(0)?;
    let (s, single, theta) = dual_to_single(&bell, &DualRailQubit::new(ModeIndex(0), ModeIndex(1))?, backend, rng)?;
    // drop the global phase e^{−iθ} left by the conversion
    let state = s.scale(cis(theta));
    Ok(HybridBell {
        state,
        single,
        dual: DualRailQubit::new(ModeIndex(1), ModeIndex(2))?,
        theta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsmOutcome {
    BellPlus,
    BellMinus,
    FailZero,
    /// Two or more photons detected.
    FailTwo { counts: [u8; 2] },
}

impl BsmOutcome {
    fn from_counts(c: [u8; 2]) -> Self {
        match c {
            [1, 0] => BsmOutcome::BellPlus,
            [0, 1] => BsmOutcome::BellMinus,
            [0, 0] => BsmOutcome::FailZero,
            counts => BsmOutcome::FailTwo { counts },
        }
    }

    pub fn counts(&self) -> [u8; 2] {
        match *self {
            BsmOutcome::BellPlus => [1, 0],
            BsmOutcome::BellMinus => [0, 1],
            BsmOutcome::FailZero => [0, 0],
            BsmOutcome::FailTwo { counts } => counts,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, BsmOutcome::BellPlus | BsmOutcome::BellMinus)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BsmOutcome::BellPlus => "bell_plus",
            BsmOutcome::BellMinus => "bell_minus",
            BsmOutcome::FailZero => "fail_zero",
            BsmOutcome::FailTwo { .. } => "fail_two",
        }
    }
}

/// Bell measurement of the single-rail modes `m1`, `m2`. Returns the outcome,
/// the normalized posterior with both modes removed, and the outcome
/// probability.
pub fn bell_measurement_single_rail<R: Rng + ?Sized>(
    s: &PureState,
    m1: ModeIndex,
    m2: ModeIndex,
    rng: &mut R,
) -> Result<(BsmOutcome, PureState, f64)> {
    let mixed = beamsplitter(s, &BeamsplitterSpec::balanced(m1, m2)?)?;
    let out = photon_count(&mixed, &[m1, m2], rng)?;
    let counts = match &out.kind {
        OutcomeKind::PhotonCount(c) => [c[0], c[1]],
        _ => unreachable!("photon counting returns counts"),
    };
    Ok((BsmOutcome::from_counts(counts), out.posterior, out.density))
}

/// Outcome of a protocol that can fail.
#[derive(Clone, Debug, PartialEq)]
pub enum GateOutcome<Q> {
    Success {
        state: PureState,
        qubit: Q,
        bsm: BsmOutcome,
        /// Every phase measurement result, in order.
        thetas: Vec<f64>,
    },
    /// The Bell measurement failed and measured the qubit instead.
    Failure {
        /// Logical value the qubit collapsed to.
        collapsed: u8,
        posterior: PureState,
        /// Probability of the observed failure branch.
        probability: f64,
        bsm: BsmOutcome,
        thetas: Vec<f64>,
    },
}

impl<Q> GateOutcome<Q> {
    pub fn is_success(&self) -> bool {
        matches!(self, GateOutcome::Success { .. })
    }

    pub fn bsm(&self) -> BsmOutcome {
        match self {
            GateOutcome::Success { bsm, .. } | GateOutcome::Failure { bsm, .. } => *bsm,
        }
    }

    pub fn thetas(&self) -> &[f64] {
        match self {
            GateOutcome::Success { thetas, .. } | GateOutcome::Failure { thetas, .. } => thetas,
        }
    }

    pub fn state(&self) -> &PureState {
        match self {
            GateOutcome::Success { state, .. } => state,
            GateOutcome::Failure { posterior, .. } => posterior,
        }
    }
}

/// Teleport the single-rail qubit `q` onto a fresh dual-rail pair.
///
/// The hybrid resource is appended after the existing modes; on success the
/// dual-rail qubit occupies the last two modes of the returned state and `q`
/// is gone.
pub fn teleport_single_to_dual<R: Rng + ?Sized>(
    s: &PureState,
    q: SingleRailQubit,
    backend: &Backend,
    rng: &mut R,
) -> Result<GateOutcome<DualRailQubit>> {
    s.check_mode(q.mode)?;
    let n = s.n_modes();
    let resource = hybrid_bell(backend, rng)?;
    let joint = s.tensor(&resource.state)?;
    let (bsm, posterior, probability) = bell_measurement_single_rail(&joint, q.mode, ModeIndex(n), rng)?;
    let dual = DualRailQubit::new(ModeIndex(n - 1), ModeIndex(n))?;
    let thetas = vec![resource.theta];
    match bsm {
        BsmOutcome::BellPlus => Ok(GateOutcome::Success {
            state: posterior,
            qubit: dual,
            bsm,
            thetas,
        }),
        BsmOutcome::BellMinus => Ok(GateOutcome::Success {
            state: dual_rail_z(&posterior, &dual)?,
            qubit: dual,
            bsm,
            thetas,
        }),
        BsmOutcome::FailZero | BsmOutcome::FailTwo { .. } => Ok(GateOutcome::Failure {
            collapsed: if bsm == BsmOutcome::FailZero { 1 } else { 0 },
            posterior,
            probability,
            bsm,
            thetas,
        }),
    }
}

/// Apply `u` to a single-rail qubit by teleporting it into dual rail, rotating
/// there, and converting back. Succeeds with probability 1/2; on success the
/// qubit is returned at its original mode index.
pub fn apply_single_rail_unitary<R: Rng + ?Sized>(
    s: &PureState,
    q: SingleRailQubit,
    u: &Matrix2,
    backend: &Backend,
    rng: &mut R,
) -> Result<GateOutcome<SingleRailQubit>> {
    u.check_unitary()?;
    match teleport_single_to_dual(s, q, backend, rng)? {
        GateOutcome::Success {
            state,
            qubit,
            bsm,
            mut thetas,
        } => {
            let rotated = dual_rail_unitary(&state, &qubit, u)?;
            let (back, single, theta) = dual_to_single(&rotated, &qubit, backend, rng)?;
            thetas.push(theta);
            let state = back.move_mode(single.mode, q.mode)?;
            Ok(GateOutcome::Success {
                state,
                qubit: q,
                bsm,
                thetas,
            })
        }
        GateOutcome::Failure {
            collapsed,
            posterior,
            probability,
            bsm,
            thetas,
        } => Ok(GateOutcome::Failure {
            collapsed,
            posterior,
            probability,
            bsm,
            thetas,
        }),
    }
}

/// Normalized `(c0, c1)` as a one-mode single-rail state.
pub fn single_rail_state(c0: C64, c1: C64) -> Result<PureState> {
    SingleRailQubit::encode(c0, c1)?.normalize()
}

/// `(|0⟩+|1⟩)/√2`.
pub fn plus() -> PureState {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    SingleRailQubit::encode(h, h).expect("one-mode qubit")
}
