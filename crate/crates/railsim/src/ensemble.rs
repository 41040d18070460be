//! Deterministic parallel trial runner.
//!
//! Trial `i` of a run seeded with `seed` always draws from ChaCha8 stream `i`
//! of `seed`, and results are reduced in trial order over fixed-size chunks,
//! so output does not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use railsim_core::measurement::apm_density;
use railsim_core::trajectory::{DyneSimulator, FeedbackPolicy, PulseShape};
use railsim_core::{ModeIndex, PureState};

/// Trials reduced sequentially inside one work item.
pub const CHUNK: usize = 256;

/// Environment variable fixing the worker count.
pub const THREADS_ENV: &str = "RAILSIM_THREADS";

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn requested_threads() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}

/// Run `f` on a pool sized by [`THREADS_ENV`], or on the global pool.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match requested_threads()? {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
    }
}

/// Run `n` independent trials and collect their results in trial order.
pub fn map_trials<T, E, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T, E> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(i, &mut trial_rng(seed, i)))
        .collect()
}

/// Fold `n` trials into an accumulator. Each chunk of [`CHUNK`] trials is
/// folded in order from `init()`; chunk results are then merged in order.
pub fn fold_trials<A, E, I, F, M>(n: usize, seed: u64, init: I, f: F, merge: M) -> Result<A, E>
where
    A: Send,
    E: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64, &mut ChaCha8Rng) -> Result<(), E> + Sync,
    M: Fn(&mut A, A),
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(n);
            for i in (c * CHUNK)..end {
                f(&mut acc, i as u64, &mut trial_rng(seed, i as u64))?;
            }
            Ok(acc)
        })
        .collect::<Result<_, E>>()?;
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Integrated currents `X` of homodyne trajectories on vacuum.
pub fn integrated_quadrature_check(
    pulse: &PulseShape,
    phase: f64,
    n: usize,
    seed: u64,
) -> railsim_core::Result<Vec<f64>> {
    let vacuum = PureState::vacuum(1)?;
    let sim = DyneSimulator::new(&vacuum, ModeIndex(0), pulse, FeedbackPolicy::homodyne(phase))?;
    map_trials(n, seed, |_, rng| sim.run(rng, false).map(|(rec, _)| rec.x))
}

/// Ensemble mean of the current `I(t)` on the step grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentProfile {
    pub n: usize,
    /// Step midpoints.
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    /// Standard error of `mean` from the empirical spread.
    pub std_err: Vec<f64>,
    /// `2 Re⟨a e^{−iΦ}⟩` of the input, for a homodyne policy.
    pub quadrature: Option<f64>,
}

pub fn mean_current_profile(
    state: &PureState,
    mode: ModeIndex,
    pulse: &PulseShape,
    policy: FeedbackPolicy,
    n: usize,
    seed: u64,
) -> railsim_core::Result<CurrentProfile> {
    let sim = DyneSimulator::new(state, mode, pulse, policy)?;
    let steps = pulse.steps();
    let dt = pulse.dt();
    let (sum, sum_sq) = fold_trials(
        n,
        seed,
        || (vec![0.0f64; steps], vec![0.0f64; steps]),
        |acc, _, rng| {
            let mut traj = sim.start();
            while let Some(step) = traj.step(rng)? {
                let i = step.current / dt;
                acc.0[step.k] += i;
                acc.1[step.k] += i * i;
            }
            Ok(())
        },
        |acc, part| {
            for k in 0..steps {
                acc.0[k] += part.0[k];
                acc.1[k] += part.1[k];
            }
        },
    )?;
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / nf - m * m).max(0.0) * nf / (nf - 1.0).max(1.0) / nf).sqrt())
        .collect();
    let t = (0..steps).map(|k| pulse.time(k) + 0.5 * dt).collect();
    let quadrature = match policy.law {
        railsim_core::PhaseLaw::Homodyne { phase } => {
            let d = apm_density(state, mode).ok();
            // ⟨a e^{−iΦ}⟩ equals κ e^{−iΦ} on the one-photon subspace
            d.map(|d| 2.0 * (d.kappa * num_complex::Complex64::from_polar(1.0, -phase)).re)
        }
        _ => None,
    };
    Ok(CurrentProfile {
        n,
        t,
        mean,
        std_err,
        quadrature,
    })
}
