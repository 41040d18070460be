//! Analytic measurement backend.
//!
//! Three measurements act on one or more modes of a [`PureState`]:
//!
//! * photon counting, sampled from the exact joint occupation distribution;
//! * homodyne detection of the quadrature `X = a e^{−iΦ} + a† e^{iΦ}`
//!   (vacuum variance 1), sampled by inverse CDF on a tabulated grid;
//! * the adaptive phase measurement, whose POVM on the `{|0⟩, |1⟩}` subspace
//!   is `|θ⟩⟨θ| dθ / 2π` with the unnormalized `|θ⟩ = |0⟩ + e^{iθ}|1⟩`.
//!
//! Every outcome carries the normalized posterior of the unmeasured modes and
//! the probability (or probability density) of the result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{ModeIndex, PureState};
use crate::linear_optics::Matrix2;
use crate::math::{cis, wrap_angle};
use crate::C64;

/// Squared-magnitude threshold separating genuine multi-photon support from
/// pruning residue.
pub const OVER_OCCUPIED_EPS: f64 = 1e-12;

/// Largest photon number for which quadrature wavefunctions are tabulated.
pub const QUAD_N_LIMIT: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum OutcomeKind {
    /// Photon numbers, one per measured mode in the order requested.
    PhotonCount(Vec<u8>),
    Homodyne { x: f64, phi: f64 },
    /// Phase estimate in `[0, 2π)`.
    Apm { theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub kind: OutcomeKind,
    /// Normalized state of the unmeasured modes.
    pub posterior: PureState,
    /// Probability for counts, probability density for continuous results.
    pub density: f64,
}

/// Joint occupation distribution of `modes`, in lexicographic outcome order.
pub fn count_distribution(s: &PureState, modes: &[ModeIndex]) -> Result<Vec<(Vec<u8>, f64)>> {
    for &m in modes {
        s.check_mode(m)?;
    }
    let norm = s.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let mut dist: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for (k, a) in s.iter() {
        let key: Vec<u8> = modes.iter().map(|m| k.get(m.0)).collect();
        *dist.entry(key).or_insert(0.0) += a.norm_sqr() / norm;
    }
    Ok(dist.into_iter().collect())
}

pub fn photon_count<R: Rng + ?Sized>(s: &PureState, modes: &[ModeIndex], rng: &mut R) -> Result<MeasurementOutcome> {
    let dist = count_distribution(s, modes)?;
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    let mut chosen = dist.len() - 1;
    for (i, (_, p)) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = i;
            break;
        }
    }
    let (occ, p) = dist[chosen].clone();
    let (residual, _) = s.project_occupations(modes, &occ)?;
    Ok(MeasurementOutcome {
        kind: OutcomeKind::PhotonCount(occ),
        posterior: residual.normalize()?,
        density: p,
    })
}

/// `⟨x|n⟩` for the quadrature `a + a†`:
/// `ψ_n(x) = (2π)^{−1/4} (n!)^{−1/2} 2^{−n/2} H_n(x/√2) e^{−x²/4}`.
pub fn quad_psi(n: usize, x: f64) -> Result<f64> {
    if n > QUAD_N_LIMIT {
        return Err(Error::InvalidParameter("photon number above quadrature table limit"));
    }
    let mut out = [0.0; QUAD_N_LIMIT + 1];
    quad_psi_into(x, &mut out[..=n]);
    Ok(out[n])
}

/// Fill `out[n] = ψ_n(x)` using `x ψ_n = √(n+1) ψ_{n+1} + √n ψ_{n−1}`.
fn quad_psi_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = Float::powf(TAU, -0.25) * Float::exp(-x * x / 4.0);
    if out.len() > 1 {
        out[1] = x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        out[n + 1] = (x * out[n] - Float::sqrt(n as f64) * out[n - 1]) / Float::sqrt((n + 1) as f64);
    }
}

/// Quadrature wavefunctions tabulated on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    x_min: f64,
    x_max: f64,
    n_max: usize,
    xs: Vec<f64>,
    /// `psi[n][i] = ψ_n(xs[i])`
    psi: Vec<Vec<f64>>,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid::new(-8.0, 8.0, 4001, 2).expect("default grid is valid")
    }
}

impl QuadratureGrid {
    /// Normalization tolerance of every tabulated wavefunction.
    pub const NORM_TOL: f64 = 1e-6;

    pub fn new(x_min: f64, x_max: f64, n_points: usize, n_max: usize) -> Result<Self> {
        if !(x_max > x_min) || n_points < 3 || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter("quadrature grid needs x_min < x_max and three points"));
        }
        if n_max > QUAD_N_LIMIT {
            return Err(Error::InvalidParameter("photon number above quadrature table limit"));
        }
        let h = (x_max - x_min) / (n_points - 1) as f64;
        let xs: Vec<f64> = (0..n_points).map(|i| x_min + h * i as f64).collect();
        let mut psi = vec![vec![0.0; n_points]; n_max + 1];
        let mut buf = vec![0.0; n_max + 1];
        for (i, &x) in xs.iter().enumerate() {
            quad_psi_into(x, &mut buf);
            for n in 0..=n_max {
                psi[n][i] = buf[n];
            }
        }
        let grid = QuadratureGrid {
            x_min,
            x_max,
            n_max,
            xs,
            psi,
        };
        for n in 0..=n_max {
            let norm = grid.integrate(|i| grid.psi[n][i] * grid.psi[n][i]);
            if (norm - 1.0).abs() > Self::NORM_TOL {
                return Err(Error::GridRangeExceeded { n, norm });
            }
        }
        Ok(grid)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    pub fn step(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    /// `ψ_n` at grid point `i`.
    pub fn psi(&self, n: usize, i: usize) -> f64 {
        self.psi[n][i]
    }

    /// Trapezoid rule over the grid.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let n = self.xs.len();
        let inner: f64 = (1..n - 1).map(&f).sum();
        self.step() * (inner + 0.5 * (f(0) + f(n - 1)))
    }
}

/// Reduced density matrix `ρ[n][m] = Σ_r c_{n,r} c*_{m,r} / ‖ψ‖²` of one mode.
fn reduced_density(s: &PureState, mode: ModeIndex) -> Result<Vec<Vec<C64>>> {
    let (_, blocks) = s.blocks(mode)?;
    let norm = s.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let d = blocks.len();
    let mut rho = vec![vec![C64::new(0.0, 0.0); d]; d];
    for n in 0..d {
        for m in 0..d {
            rho[n][m] = blocks[n]
                .iter()
                .zip(&blocks[m])
                .map(|(a, b)| a * b.conj())
                .sum::<C64>()
                / norm;
        }
    }
    Ok(rho)
}

/// Homodyne sampler for one mode at fixed local-oscillator phase.
///
/// The marginal density `p(x) = ‖⟨x|_Φ ψ⟩‖²` is tabulated once; each sample
/// inverts the trapezoid CDF by linear interpolation, after which the
/// posterior is formed from the exact `ψ_n(x)`.
#[derive(Clone, Debug)]
pub struct HomodyneSampler<'a> {
    state: &'a PureState,
    mode: ModeIndex,
    phi: f64,
    rho: Vec<Vec<C64>>,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl<'a> HomodyneSampler<'a> {
    pub fn new(state: &'a PureState, mode: ModeIndex, phi: f64, grid: &QuadratureGrid) -> Result<Self> {
        let top = state.max_occupation(mode)? as usize;
        if top > grid.n_max() {
            return Err(Error::InvalidParameter("measured mode occupation exceeds quadrature grid n_max"));
        }
        let rho = reduced_density(state, mode)?;
        let xs = grid.points().to_vec();
        let pdf: Vec<f64> = (0..xs.len())
            .map(|i| {
                let mut p = 0.0;
                for n in 0..=top {
                    for m in 0..=top {
                        let phase = cis(-((n as f64) - (m as f64)) * phi);
                        p += grid.psi(n, i) * grid.psi(m, i) * (phase * rho[n][m]).re;
                    }
                }
                p.max(0.0)
            })
            .collect();
        let h = grid.step();
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let last = cdf[i - 1];
            cdf.push(last + 0.5 * h * (pdf[i - 1] + pdf[i]));
        }
        let mass = cdf[cdf.len() - 1];
        if (mass - 1.0).abs() > QuadratureGrid::NORM_TOL {
            return Err(Error::GridRangeExceeded { n: top, norm: mass });
        }
        Ok(HomodyneSampler {
            state,
            mode,
            phi,
            rho,
            xs,
            cdf,
        })
    }

    /// Exact marginal density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let d = self.rho.len();
        let mut psi = vec![0.0; d];
        quad_psi_into(x, &mut psi);
        let mut p = 0.0;
        for n in 0..d {
            for m in 0..d {
                let phase = cis(-((n as f64) - (m as f64)) * self.phi);
                p += psi[n] * psi[m] * (phase * self.rho[n][m]).re;
            }
        }
        p
    }

    /// Tabulated CDF, linearly interpolated; 0 below and 1 above the grid.
    pub fn cdf(&self, x: f64) -> f64 {
        let total = self.cdf[self.cdf.len() - 1];
        if x <= self.xs[0] {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return 1.0;
        }
        let h = self.xs[1] - self.xs[0];
        let i = (((x - self.xs[0]) / h) as usize).min(last - 1);
        let f = (x - self.xs[i]) / h;
        (self.cdf[i] + f * (self.cdf[i + 1] - self.cdf[i])) / total
    }

    /// Draw one quadrature value from the tabulated distribution.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cdf[self.cdf.len() - 1];
        let u = rng.random::<f64>() * total;
        // first index with cdf > u
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let i = j - 1;
        let span = self.cdf[j] - self.cdf[i];
        let f = if span > 0.0 { (u - self.cdf[i]) / span } else { 0.5 };
        self.xs[i] + f * (self.xs[j] - self.xs[i])
    }

    /// Condition the state on the quadrature value `x`.
    pub fn condition(&self, x: f64) -> Result<MeasurementOutcome> {
        let d = self.state.truncation().n_max as usize + 1;
        let mut psi = vec![0.0; d];
        quad_psi_into(x, &mut psi);
        let bra: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(n, &p)| cis(-(n as f64) * self.phi) * p)
            .collect();
        let (residual, weight) = self.state.project_mode(self.mode, &bra)?;
        if !(weight > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        Ok(MeasurementOutcome {
            kind: OutcomeKind::Homodyne { x, phi: self.phi },
            posterior: residual.normalize()?,
            density: weight / self.state.norm_sqr(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MeasurementOutcome> {
        let x = self.draw(rng);
        self.condition(x)
    }
}

/// Homodyne-detect `mode` at local-oscillator phase `phi`.
pub fn homodyne_sample<R: Rng + ?Sized>(
    s: &PureState,
    mode: ModeIndex,
    phi: f64,
    grid: &QuadratureGrid,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    HomodyneSampler::new(s, mode, phi, grid)?.sample(rng)
}

/// `p(θ) = (P₀ + P₁ + 2 Re(κ e^{−iθ})) / 2π` with `κ = Σ_r c*_{0,r} c_{1,r}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApmDensity {
    pub total: f64,
    pub kappa: C64,
}

impl ApmDensity {
    pub fn eval(&self, theta: f64) -> f64 {
        (self.total + 2.0 * (self.kappa * cis(-theta)).re) / TAU
    }

    /// `∫₀^θ p`, for `θ ∈ [0, 2π]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        // ∫₀^θ e^{−is} ds = (1 − e^{−iθ}) / i
        let osc = self.kappa * (C64::new(1.0, 0.0) - cis(-theta)) * C64::new(0.0, -1.0);
        (self.total * theta + 2.0 * osc.re) / TAU
    }

    /// Constant rejection envelope, `max_θ p(θ) ≤ envelope`.
    pub fn envelope(&self) -> f64 {
        (self.total + 2.0 * self.kappa.norm()) / TAU
    }
}

pub(crate) fn check_single_photon_support(s: &PureState, mode: ModeIndex) -> Result<()> {
    s.check_mode(mode)?;
    let weight: f64 = s
        .iter()
        .filter(|(k, _)| k.get(mode.0) >= 2)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        / s.norm_sqr();
    if weight > OVER_OCCUPIED_EPS {
        Err(Error::OverOccupied { mode: mode.0, weight })
    } else {
        Ok(())
    }
}

/// Density of the adaptive phase estimate on `mode`.
pub fn apm_density(s: &PureState, mode: ModeIndex) -> Result<ApmDensity> {
    check_single_photon_support(s, mode)?;
    let (_, blocks) = s.blocks(mode)?;
    let norm = s.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let zero = vec![C64::new(0.0, 0.0); blocks[0].len()];
    let b0 = &blocks[0];
    let b1 = blocks.get(1).unwrap_or(&zero);
    let total = (b0.iter().chain(b1.iter()).map(|a| a.norm_sqr()).sum::<f64>()) / norm;
    let kappa = b0.iter().zip(b1).map(|(a, b)| a.conj() * b).sum::<C64>() / norm;
    Ok(ApmDensity { total, kappa })
}

/// Bra coefficients of `⟨θ| = ⟨0| + e^{−iθ}⟨1|`.
pub fn phase_bra(theta: f64) -> [C64; 2] {
    [C64::new(1.0, 0.0), cis(-theta)]
}

/// POVM element `|θ⟩⟨θ| / 2π` on `span{|0⟩, |1⟩}`.
pub fn phase_effect(theta: f64) -> Matrix2 {
    let e = cis(theta);
    let o = C64::new(1.0 / TAU, 0.0);
    Matrix2([[o, e.conj() * o], [e * o, o]])
}

/// Condition `s` on the phase result `theta`: `⟨θ|ψ⟩`, renormalized.
pub fn apm_condition(s: &PureState, mode: ModeIndex, theta: f64) -> Result<MeasurementOutcome> {
    let theta = wrap_angle(theta);
    let (residual, weight) = s.project_mode(mode, &phase_bra(theta))?;
    if !(weight > 0.0) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(MeasurementOutcome {
        kind: OutcomeKind::Apm { theta },
        posterior: residual.normalize()?,
        density: weight / (TAU * s.norm_sqr()),
    })
}

/// Adaptive phase measurement of `mode`, sampled by rejection against the
/// constant envelope of the raised-cosine density.
pub fn apm_sample<R: Rng + ?Sized>(s: &PureState, mode: ModeIndex, rng: &mut R) -> Result<MeasurementOutcome> {
    let density = apm_density(s, mode)?;
    let envelope = density.envelope();
    let theta = loop {
        let theta = wrap_angle(rng.random::<f64>() * TAU);
        let u = rng.random::<f64>() * envelope;
        if u < density.eval(theta) {
            break theta;
        }
    };
    apm_condition(s, mode, theta)
}

/// `(1 + cos(θ − φ₀)) / 2π`, the phase density of `(|0⟩ + e^{iφ₀}|1⟩)/√2`.
pub fn raised_cosine_density(theta: f64, phi0: f64) -> f64 {
    (1.0 + Float::cos(theta - phi0)) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Truncation;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_1_SQRT_2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn split() -> PureState {
        let h = c(FRAC_1_SQRT_2, 0.0);
        PureState::from_amplitudes(2, Truncation::default(), [(vec![0, 1], h), (vec![1, 0], h)]).unwrap()
    }

    fn phase_state(phi0: f64) -> PureState {
        PureState::from_amplitudes(
            1,
            Truncation::default(),
            [(vec![0], c(FRAC_1_SQRT_2, 0.0)), (vec![1], cis(phi0) * FRAC_1_SQRT_2)],
        )
        .unwrap()
    }

    /// Printed comparison density `e^{−x²/2}(1 + x²) / (2√(2π))`.
    fn split_homodyne_density(x: f64) -> f64 {
        (-x * x / 2.0).exp() * (1.0 + x * x) / (2.0 * (2.0 * PI).sqrt())
    }

    #[test]
    fn counting_split_photon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dist = count_distribution(&split(), &[ModeIndex(0)]).unwrap();
        assert_eq!(dist.len(), 2);
        assert_eq!((dist[0].0.clone(), dist[1].0.clone()), (vec![0], vec![1]));
        assert_abs_diff_eq!(dist[0].1, 0.5, epsilon = 1e-15);
        for _ in 0..20 {
            let out = photon_count(&split(), &[ModeIndex(0)], &mut rng).unwrap();
            match out.kind {
                OutcomeKind::PhotonCount(ref n) if n[0] == 0 => {
                    assert_abs_diff_eq!(out.posterior.amplitude(&[1]).norm(), 1.0, epsilon = 1e-15)
                }
                OutcomeKind::PhotonCount(ref n) => {
                    assert_eq!(n[0], 1);
                    assert_abs_diff_eq!(out.posterior.amplitude(&[0]).norm(), 1.0, epsilon = 1e-15)
                }
                _ => unreachable!(),
            }
            assert_abs_diff_eq!(out.density, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn counting_definite_and_hom() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let one = PureState::fock(&[1]).unwrap();
        let out = photon_count(&one, &[ModeIndex(0)], &mut rng).unwrap();
        assert_eq!(out.kind, OutcomeKind::PhotonCount(vec![1]));
        assert_eq!(out.density, 1.0);
        assert_eq!(out.posterior.n_modes(), 0);

        let h = c(FRAC_1_SQRT_2, 0.0);
        let hom = PureState::from_amplitudes(2, Truncation::default(), [(vec![2, 0], h), (vec![0, 2], -h)]).unwrap();
        let dist = count_distribution(&hom, &[ModeIndex(0), ModeIndex(1)]).unwrap();
        assert_eq!(dist.len(), 2);
        assert!(dist.iter().all(|(k, _)| k != &vec![1, 1]));
        for (_, p) in dist {
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn quadrature_wavefunctions() {
        assert_eq!(quad_psi(1, 0.0).unwrap(), 0.0);
        assert!(quad_psi(QUAD_N_LIMIT + 1, 0.0).is_err());
        let grid = QuadratureGrid::new(-10.0, 10.0, 8001, 6).unwrap();
        // orthonormality
        for n in 0..=6 {
            for m in 0..=6 {
                let ip = grid.integrate(|i| grid.psi(n, i) * grid.psi(m, i));
                assert_abs_diff_eq!(ip, if n == m { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
        // closed form through the Hermite polynomial H_2(y) = 4y² − 2
        for &x in &[-2.3, 0.0, 0.7, 3.1] {
            let y: f64 = x / 2f64.sqrt();
            let expected = (2.0 * PI).powf(-0.25) / (2f64.sqrt() * 2.0) * (4.0 * y * y - 2.0) * (-x * x / 4.0).exp();
            assert_abs_diff_eq!(quad_psi(2, x).unwrap(), expected, epsilon = 1e-14);
            let c = quad_psi(0, x).unwrap();
            assert_abs_diff_eq!(c * c * (1.0 + x * x) / 2.0, split_homodyne_density(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn grid_too_narrow() {
        assert!(matches!(QuadratureGrid::new(-2.0, 2.0, 401, 2), Err(Error::GridRangeExceeded { .. })));
        assert!(QuadratureGrid::new(1.0, 1.0, 401, 2).is_err());
    }

    #[test]
    fn homodyne_split_state() {
        let grid = QuadratureGrid::default();
        let s = split();
        let sampler = HomodyneSampler::new(&s, ModeIndex(0), 0.0, &grid).unwrap();
        assert_abs_diff_eq!(sampler.density(0.0), 1.0 / (2.0 * (2.0 * PI).sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(sampler.density(0.0), 0.19947114020071635, epsilon = 1e-15);
        for &x in &[-3.0, -1.0, 0.5, 2.5] {
            assert_abs_diff_eq!(sampler.density(x), split_homodyne_density(x), epsilon = 1e-14);
        }
        let out = sampler.condition(0.8).unwrap();
        let target = PureState::from_amplitudes(1, Truncation::default(), [(vec![0], c(0.8, 0.0)), (vec![1], c(1.0, 0.0))])
            .unwrap()
            .normalize()
            .unwrap();
        assert_abs_diff_eq!(out.posterior.fidelity(&target).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.density, split_homodyne_density(0.8), epsilon = 1e-14);
    }

    #[test]
    fn homodyne_vacuum_moments() {
        let grid = QuadratureGrid::default();
        let v = PureState::vacuum(1).unwrap();
        let sampler = HomodyneSampler::new(&v, ModeIndex(0), 0.3, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn homodyne_mean_matches_expectation() {
        // ⟨a e^{−iΦ} + a† e^{iΦ}⟩ of (|0⟩ + e^{iφ₀}|1⟩)/√2 is cos(φ₀ − Φ)
        let grid = QuadratureGrid::default();
        let s = phase_state(0.9);
        let phi = 0.2;
        let sampler = HomodyneSampler::new(&s, ModeIndex(0), phi, &grid).unwrap();
        let mean_exact = grid.integrate(|i| grid.points()[i] * sampler.density(grid.points()[i]));
        assert_abs_diff_eq!(mean_exact, (0.9f64 - phi).cos(), epsilon = 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((mean - mean_exact).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn homodyne_rejects_unsupported_occupation() {
        let grid = QuadratureGrid::new(-8.0, 8.0, 4001, 1).unwrap();
        let s = PureState::fock(&[2]).unwrap();
        assert!(HomodyneSampler::new(&s, ModeIndex(0), 0.0, &grid).is_err());
    }

    #[test]
    fn apm_densities() {
        let d = apm_density(&split(), ModeIndex(0)).unwrap();
        for &t in &[0.0, 1.0, 4.0] {
            assert_abs_diff_eq!(d.eval(t), 1.0 / TAU, epsilon = 1e-15);
        }
        let phi0 = 1.1;
        let d = apm_density(&phase_state(phi0), ModeIndex(0)).unwrap();
        for &t in &[0.0, 0.4, 2.0, 5.9] {
            assert_abs_diff_eq!(d.eval(t), raised_cosine_density(t, phi0), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(d.cdf(TAU), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.cdf(0.0), 0.0, epsilon = 1e-15);
        // cdf against midpoint quadrature of the density
        let n = 20_000;
        let h = 3.0 / n as f64;
        let q: f64 = (0..n).map(|i| d.eval((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert_abs_diff_eq!(d.cdf(3.0), q, epsilon = 1e-9);

        let vac = PureState::vacuum(1).unwrap();
        let d = apm_density(&vac, ModeIndex(0)).unwrap();
        assert_abs_diff_eq!(d.eval(2.0), 1.0 / TAU, epsilon = 1e-15);
    }

    #[test]
    fn apm_over_occupied() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = PureState::from_amplitudes(1, Truncation::default(), [(vec![0], h), (vec![2], h)]).unwrap();
        assert!(matches!(apm_density(&s, ModeIndex(0)), Err(Error::OverOccupied { mode: 0, .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(apm_sample(&s, ModeIndex(0), &mut rng).is_err());
    }

    #[test]
    fn apm_split_posterior_is_phase_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let out = apm_sample(&split(), ModeIndex(0), &mut rng).unwrap();
            let OutcomeKind::Apm { theta } = out.kind else { unreachable!() };
            assert!((0.0..TAU).contains(&theta));
            // posterior ∝ |1⟩ + e^{−iθ}|0⟩ ∝ |0⟩ + e^{iθ}|1⟩
            assert_abs_diff_eq!(out.posterior.fidelity(&phase_state(theta)).unwrap(), 1.0, epsilon = 1e-12);
            let corrected = out.posterior.apply_phase(ModeIndex(0), -theta).unwrap();
            assert_abs_diff_eq!(corrected.fidelity(&phase_state(0.0)).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(out.density, 1.0 / TAU, epsilon = 1e-14);
        }
    }

    #[test]
    fn apm_on_single_photon() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = PureState::fock(&[1, 1]).unwrap();
        let out = apm_sample(&s, ModeIndex(0), &mut rng).unwrap();
        let OutcomeKind::Apm { theta } = out.kind else { unreachable!() };
        let amp = out.posterior.amplitude(&[1]);
        assert_abs_diff_eq!((amp - cis(-theta)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_povm_completeness() {
        let n = 4096;
        let mut acc = [[C64::new(0.0, 0.0); 2]; 2];
        for k in 0..n {
            let e = phase_effect(TAU * k as f64 / n as f64);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += e.0[i][j] * (TAU / n as f64);
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((acc[i][j] - c(expect, 0.0)).norm(), 0.0, epsilon = 1e-10);
            }
        }
    }
}
