//! Time-domain dyne detection of a pulsed mode with real-time feedback.
//!
//! The measured mode is treated as a source emptying into the detector with
//! the time-dependent rate `γ(t) = u(t) / (1 − U(t))`, where `u` is the pulse
//! envelope and `U` its cumulative integral. Each step of length `dt`:
//!
//! 1. `x̄ = ⟨a e^{−iΦ} + a† e^{iΦ}⟩` on the normalized conditional state;
//! 2. raw current `J dt = √γ x̄ dt + ΔW`, `ΔW ~ N(0, dt)`;
//! 3. mode-matched current `I = √u · J`, so that `⟨I⟩ = u ⟨x_Φ⟩`;
//! 4. `ψ ← (1 − ½γ a†a dt + √γ e^{−iΦ} a J dt) ψ`, renormalized;
//! 5. the adaptive law accumulates `Φ ← Φ + I dt / √U`, where `U` is taken at
//!    the end of the step.
//!
//! After the last step `Θ = (Σ I dt/√U − π/2) mod 2π` and `X = Σ I dt`.
//! Whatever excitation is left in the measured mode is projected onto vacuum.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, ModeIndex, PureState, Truncation};
use crate::math::{cis, wrap_angle};
use crate::C64;

/// Cells whose starting `U` exceeds `1 − END_EPS` are dropped.
pub const END_EPS: f64 = 1e-6;

/// Tolerance on `U(T) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseKind {
    /// `u ∝ e^{−rate·t}` on `[0, T]`, renormalized so that `U(T) = 1`.
    ExpDecay { rate: f64 },
    /// `u = (1 − cos(2πt/T)) / T`.
    RaisedCosine,
    /// `u = 1/T`.
    Flat,
}

impl PulseKind {
    fn cumulative(&self, t: f64, duration: f64) -> f64 {
        match *self {
            PulseKind::Flat => t / duration,
            PulseKind::ExpDecay { rate } => (1.0 - Float::exp(-rate * t)) / (1.0 - Float::exp(-rate * duration)),
            PulseKind::RaisedCosine => t / duration - Float::sin(TAU * t / duration) / TAU,
        }
    }

    fn envelope(&self, t: f64, duration: f64) -> f64 {
        if !(0.0..=duration).contains(&t) {
            return 0.0;
        }
        match *self {
            PulseKind::Flat => 1.0 / duration,
            PulseKind::ExpDecay { rate } => rate * Float::exp(-rate * t) / (1.0 - Float::exp(-rate * duration)),
            PulseKind::RaisedCosine => (1.0 - Float::cos(TAU * t / duration)) / duration,
        }
    }
}

/// A pulse envelope discretized into cells of width `dt`.
///
/// `u[k]` is the cell average `(U(t_{k+1}) − U(t_k)) / dt`, so that the
/// per-step emission fractions `γ[k]·dt = ΔU / (1 − U)` never exceed one and
/// `Σ u dt` telescopes to `U(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseShape {
    kind: PulseKind,
    dt: f64,
    duration: f64,
    u: Vec<f64>,
    cumulative: Vec<f64>,
    gamma: Vec<f64>,
    total: f64,
}

impl PulseShape {
    pub fn new(kind: PulseKind, dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidPulse("dt must be positive"));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidPulse("pulse duration must be positive"));
        }
        if let PulseKind::ExpDecay { rate } = kind {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::InvalidPulse("decay rate must be positive"));
            }
        }
        let cells = Float::round(duration / dt);
        if cells < 1.0 || Float::abs(cells * dt - duration) > 1e-9 * duration {
            return Err(Error::InvalidPulse("duration must be a whole number of steps"));
        }
        let cells = cells as usize;
        let edge = |k: usize| {
            if k == cells {
                kind.cumulative(duration, duration)
            } else {
                kind.cumulative(k as f64 * dt, duration)
            }
        };
        let total = edge(cells);
        if !total.is_finite() || Float::abs(total - 1.0) > NORMALIZATION_TOL {
            return Err(Error::InvalidPulse("pulse does not normalize to U(T) = 1"));
        }
        let mut u = Vec::with_capacity(cells);
        let mut cumulative = Vec::with_capacity(cells);
        let mut gamma = Vec::with_capacity(cells);
        for k in 0..cells {
            let start = edge(k);
            if start > 1.0 - END_EPS {
                break;
            }
            let avg = ((edge(k + 1) - start) / dt).max(0.0);
            u.push(avg);
            cumulative.push(start);
            gamma.push(avg / (1.0 - start));
        }
        if u.is_empty() || !(u[0] > 0.0 || u.iter().any(|&v| v > 0.0)) {
            return Err(Error::InvalidPulse("pulse has no weight on the grid"));
        }
        Ok(PulseShape {
            kind,
            dt,
            duration,
            u,
            cumulative,
            gamma,
            total,
        })
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Number of retained steps.
    pub fn steps(&self) -> usize {
        self.u.len()
    }

    /// Start time of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Cell-averaged envelope of step `k`.
    pub fn u(&self, k: usize) -> f64 {
        self.u[k]
    }

    /// `U` at the start of step `k`.
    pub fn cumulative(&self, k: usize) -> f64 {
        self.cumulative[k]
    }

    /// `U` at the end of step `k`.
    pub fn cumulative_end(&self, k: usize) -> f64 {
        self.cumulative[k] + self.u[k] * self.dt
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma[k]
    }

    /// Closed-form `U(T)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Closed-form envelope `u(t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.kind.envelope(t, self.duration)
    }

    pub fn envelope_samples(&self) -> &[f64] {
        &self.u
    }
}

/// How the local-oscillator phase evolves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseLaw {
    Homodyne { phase: f64 },
    /// `Φ(t) = rate · t`.
    Heterodyne { rate: f64 },
    /// `Φ(t) = ∫₀ᵗ I(s) ds / √U(s)`.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackPolicy {
    pub law: PhaseLaw,
    /// Number of steps by which feedback lags the current.
    pub delay_steps: usize,
}

impl FeedbackPolicy {
    pub fn adaptive() -> Self {
        FeedbackPolicy {
            law: PhaseLaw::Adaptive,
            delay_steps: 0,
        }
    }

    pub fn homodyne(phase: f64) -> Self {
        FeedbackPolicy {
            law: PhaseLaw::Homodyne { phase },
            delay_steps: 0,
        }
    }

    pub fn heterodyne(rate: f64) -> Self {
        FeedbackPolicy {
            law: PhaseLaw::Heterodyne { rate },
            delay_steps: 0,
        }
    }

    pub fn with_delay(mut self, delay_steps: usize) -> Self {
        self.delay_steps = delay_steps;
        self
    }

    /// Loop delay as a fraction of the pulse duration. The adaptive estimate is
    /// only exact when this is much smaller than one.
    pub fn delay_fraction(&self, pulse: &PulseShape) -> f64 {
        self.delay_steps as f64 * pulse.dt() / pulse.duration()
    }
}

/// One integrator step as seen by an observer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    /// Local-oscillator phase used during the step.
    pub phi: f64,
    /// `I_k dt`.
    pub current: f64,
    /// `J_k dt`.
    pub raw_current: f64,
    /// `ΔW_k`.
    pub noise: f64,
}

/// Full time series of one trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectorySeries {
    pub times: Vec<f64>,
    pub phases: Vec<f64>,
    /// `I_k dt`
    pub current: Vec<f64>,
    /// `J_k dt`
    pub raw_current: Vec<f64>,
    pub noise: Vec<f64>,
}

impl TrajectorySeries {
    fn push(&mut self, s: &StepRecord) {
        self.times.push(s.t);
        self.phases.push(s.phi);
        self.current.push(s.current);
        self.raw_current.push(s.raw_current);
        self.noise.push(s.noise);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    /// Phase estimate in `[0, 2π)`.
    pub theta: f64,
    /// Integrated current.
    pub x: f64,
    /// Final value of the adaptive phase sum, unwrapped.
    pub phi_end: f64,
    /// Weight left in the measured mode's excited states before the final
    /// projection onto vacuum.
    pub residual_excitation: f64,
    pub series: Option<TrajectorySeries>,
}

/// Precomputed dyne simulation of one mode of a state.
#[derive(Clone, Debug)]
pub struct DyneSimulator<'p> {
    pulse: &'p PulseShape,
    policy: FeedbackPolicy,
    mode: ModeIndex,
    truncation: Truncation,
    rests: Vec<FockBasis>,
    blocks: Vec<Vec<C64>>,
}

impl<'p> DyneSimulator<'p> {
    pub fn new(state: &PureState, mode: ModeIndex, pulse: &'p PulseShape, policy: FeedbackPolicy) -> Result<Self> {
        state.check_mode(mode)?;
        let state = state.normalize()?;
        let (rests, blocks) = state.blocks(mode)?;
        Ok(DyneSimulator {
            pulse,
            policy,
            mode,
            truncation: state.truncation(),
            rests,
            blocks,
        })
    }

    pub fn pulse(&self) -> &PulseShape {
        self.pulse
    }

    pub fn policy(&self) -> FeedbackPolicy {
        self.policy
    }

    pub fn start(&self) -> Trajectory<'_, 'p> {
        let mut lagged = VecDeque::with_capacity(self.policy.delay_steps + 1);
        lagged.push_back(0.0);
        Trajectory {
            sim: self,
            k: 0,
            blocks: self.blocks.clone(),
            phase_sum: 0.0,
            lagged,
            x: 0.0,
        }
    }

    /// Run one full trajectory, optionally keeping the time series.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, keep_series: bool) -> Result<(TrajectoryRecord, PureState)> {
        let mut traj = self.start();
        let mut series = keep_series.then(TrajectorySeries::default);
        while let Some(step) = traj.step(rng)? {
            if let Some(s) = series.as_mut() {
                s.push(&step);
            }
        }
        let (mut record, posterior) = traj.finish()?;
        record.series = series;
        Ok((record, posterior))
    }
}

/// A trajectory in progress.
#[derive(Clone, Debug)]
pub struct Trajectory<'s, 'p> {
    sim: &'s DyneSimulator<'p>,
    k: usize,
    blocks: Vec<Vec<C64>>,
    phase_sum: f64,
    /// Recent values of `phase_sum`, oldest first, for the loop delay.
    lagged: VecDeque<f64>,
    x: f64,
}

impl Trajectory<'_, '_> {
    pub fn steps_taken(&self) -> usize {
        self.k
    }

    pub fn is_done(&self) -> bool {
        self.k >= self.sim.pulse.steps()
    }

    fn phase(&self, t: f64) -> f64 {
        match self.sim.policy.law {
            PhaseLaw::Homodyne { phase } => phase,
            PhaseLaw::Heterodyne { rate } => rate * t,
            PhaseLaw::Adaptive => self.lagged[0],
        }
    }

    /// Advance by one step; `None` once the pulse is exhausted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<StepRecord>> {
        if self.is_done() {
            return Ok(None);
        }
        let pulse = self.sim.pulse;
        let k = self.k;
        let dt = pulse.dt();
        let t = pulse.time(k);
        let u = pulse.u(k);
        let gamma = pulse.gamma(k);
        let phi = self.phase(t);
        let rot = cis(-phi);

        // ⟨a⟩ on the normalized state
        let mut a_mean = C64::new(0.0, 0.0);
        for n in 1..self.blocks.len() {
            let s: C64 = self.blocks[n - 1]
                .iter()
                .zip(&self.blocks[n])
                .map(|(lo, hi)| lo.conj() * hi)
                .sum();
            a_mean += s * Float::sqrt(n as f64);
        }
        let x_mean = 2.0 * (rot * a_mean).re;

        let z: f64 = StandardNormal.sample(rng);
        let noise = z * Float::sqrt(dt);
        let raw_current = Float::sqrt(gamma) * x_mean * dt + noise;
        let current = Float::sqrt(u) * raw_current;

        let kick = rot * (Float::sqrt(gamma) * raw_current);
        let top = self.blocks.len() - 1;
        for n in 0..=top {
            let damp = 1.0 - 0.5 * gamma * dt * n as f64;
            if n < top {
                let (lo, hi) = self.blocks.split_at_mut(n + 1);
                let feed = kick * Float::sqrt((n + 1) as f64);
                for (c, up) in lo[n].iter_mut().zip(&hi[0]) {
                    *c = *c * damp + feed * up;
                }
            } else {
                for c in self.blocks[n].iter_mut() {
                    *c *= damp;
                }
            }
        }
        let norm: f64 = self.blocks.iter().flatten().map(|c| c.norm_sqr()).sum();
        if !norm.is_finite() || !(norm > 0.0) {
            return Err(Error::NonFiniteState { step: k });
        }
        let scale = 1.0 / Float::sqrt(norm);
        for c in self.blocks.iter_mut().flatten() {
            *c *= scale;
        }

        let u_end = pulse.cumulative_end(k).max(pulse.u(0) * dt);
        if u_end > 0.0 {
            self.phase_sum += current / Float::sqrt(u_end);
        }
        self.lagged.push_back(self.phase_sum);
        while self.lagged.len() > self.sim.policy.delay_steps + 1 {
            self.lagged.pop_front();
        }
        self.x += current;
        self.k += 1;
        Ok(Some(StepRecord {
            k,
            t,
            phi,
            current,
            raw_current,
            noise,
        }))
    }

    /// Current conditional state including the measured mode.
    pub fn state(&self) -> PureState {
        let mode = self.sim.mode.0;
        let mut amps = Vec::new();
        for (n, block) in self.blocks.iter().enumerate() {
            for (rest, c) in self.sim.rests.iter().zip(block) {
                let mut occ = rest.occupations().to_vec();
                occ.insert(mode, n as u8);
                amps.push((occ, *c));
            }
        }
        let n_modes = self.sim.rests[0].n_modes() + 1;
        PureState::from_amplitudes(n_modes, self.sim.truncation, amps).expect("blocks respect truncation")
    }

    /// Weight currently held in the measured mode's excited states.
    pub fn excitation(&self) -> f64 {
        self.blocks[1..].iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Complete the remaining steps' bookkeeping and project the measured mode
    /// onto vacuum. Steps not yet taken are skipped.
    pub fn finish(self) -> Result<(TrajectoryRecord, PureState)> {
        let residual_excitation = self.excitation();
        let posterior = PureState::from_rests(self.sim.truncation, &self.sim.rests, &self.blocks[0]);
        let posterior = posterior.normalize().map_err(|_| Error::ImpossibleOutcome)?;
        Ok((
            TrajectoryRecord {
                theta: wrap_angle(self.phase_sum - FRAC_PI_2),
                x: self.x,
                phi_end: self.phase_sum,
                residual_excitation,
                series: None,
            },
            posterior,
        ))
    }
}

/// Simulate dyne detection of `mode` over `pulse` under `policy`.
pub fn simulate_dyne<R: Rng + ?Sized>(
    state: &PureState,
    mode: ModeIndex,
    pulse: &PulseShape,
    policy: FeedbackPolicy,
    rng: &mut R,
    keep_series: bool,
) -> Result<(TrajectoryRecord, PureState)> {
    DyneSimulator::new(state, mode, pulse, policy)?.run(rng, keep_series)
}

/// Template for `(|0⟩ + e^{iφ₀}|1⟩)/√2` used by tests and examples.
pub fn phase_qubit(phi0: f64) -> PureState {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    PureState::from_amplitudes(1, Truncation::default(), [(vec![0], C64::new(h, 0.0)), (vec![1], cis(phi0) * h)])
        .expect("valid qubit")
}
