//! Truncated multimode Fock-space pure states.
//!
//! A [`PureState`] stores complex amplitudes sparsely, keyed by occupation
//! vectors. Keys iterate in lexicographic order, so every operation visits
//! amplitudes in the same order on every run.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::math::cis;
use crate::C64;

/// Amplitudes with squared magnitude below this fraction of the state's
/// squared norm are dropped after every operation.
pub const PRUNE_EPS: f64 = 1e-14;

/// Index of one optical mode within a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(pub usize);

impl From<usize> for ModeIndex {
    fn from(i: usize) -> Self {
        ModeIndex(i)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Occupation numbers, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasis(Vec<u8>);

impl FockBasis {
    pub fn new(occupations: Vec<u8>) -> Self {
        FockBasis(occupations)
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    /// The occupation vector with `mode` removed.
    pub fn without(&self, mode: usize) -> FockBasis {
        let mut v = self.0.clone();
        v.remove(mode);
        FockBasis(v)
    }
}

impl From<&[u8]> for FockBasis {
    fn from(v: &[u8]) -> Self {
        FockBasis(v.to_vec())
    }
}

/// Truncation limits applied to every state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    /// Largest occupation of any single mode.
    pub n_max: u8,
    /// Largest total photon number of any basis vector.
    pub n_total_max: usize,
    /// Largest number of modes a state may have.
    pub max_modes: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            n_max: 2,
            n_total_max: 4,
            max_modes: 16,
        }
    }
}

impl Truncation {
    fn merge(self, other: Truncation) -> Truncation {
        Truncation {
            n_max: self.n_max.max(other.n_max),
            n_total_max: self.n_total_max.max(other.n_total_max),
            max_modes: self.max_modes.max(other.max_modes),
        }
    }

    fn check(&self, basis: &FockBasis) -> Result<()> {
        if let Some(&n) = basis.occupations().iter().find(|&&n| n > self.n_max) {
            return Err(Error::TruncationExceeded {
                occupation: n as usize,
                n_max: self.n_max,
            });
        }
        if basis.total() > self.n_total_max {
            return Err(Error::CapacityExceeded("total photon number above n_total_max"));
        }
        Ok(())
    }
}

/// A pure state of `n_modes` optical modes.
///
/// States are values: every operation returns a new state. A state with zero
/// modes holds a single scalar amplitude on the empty occupation vector and is
/// what remains after the last mode has been measured out.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_modes: usize,
    truncation: Truncation,
    amplitudes: BTreeMap<FockBasis, C64>,
}

impl PureState {
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        Self::vacuum_with(n_modes, Truncation::default())
    }

    pub fn vacuum_with(n_modes: usize, truncation: Truncation) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("a state needs at least one mode"));
        }
        if n_modes > truncation.max_modes {
            return Err(Error::CapacityExceeded("too many modes"));
        }
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(FockBasis(vec![0; n_modes]), C64::new(1.0, 0.0));
        Ok(PureState {
            n_modes,
            truncation,
            amplitudes,
        })
    }

    pub fn single_photon(n_modes: usize, mode: ModeIndex) -> Result<Self> {
        let mut occ = vec![0u8; n_modes];
        if mode.0 >= n_modes {
            return Err(Error::ModeOutOfRange {
                mode: mode.0,
                n_modes,
            });
        }
        occ[mode.0] = 1;
        Self::fock(&occ)
    }

    /// The number state with the given occupations.
    pub fn fock(occupations: &[u8]) -> Result<Self> {
        Self::from_amplitudes(
            occupations.len(),
            Truncation::default(),
            [(occupations.to_vec(), C64::new(1.0, 0.0))],
        )
    }

    /// Build a state from `(occupations, amplitude)` pairs. Repeated keys are
    /// summed. The result is not normalized.
    pub fn from_amplitudes<I>(n_modes: usize, truncation: Truncation, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, C64)>,
    {
        if n_modes > truncation.max_modes {
            return Err(Error::CapacityExceeded("too many modes"));
        }
        let mut map = BTreeMap::new();
        for (occ, amp) in amplitudes {
            if occ.len() != n_modes {
                return Err(Error::ShapeMismatch {
                    left: n_modes,
                    right: occ.len(),
                });
            }
            let key = FockBasis(occ);
            truncation.check(&key)?;
            *map.entry(key).or_insert(C64::new(0.0, 0.0)) += amp;
        }
        Ok(Self::from_map(n_modes, truncation, map))
    }

    pub(crate) fn from_map(
        n_modes: usize,
        truncation: Truncation,
        mut amplitudes: BTreeMap<FockBasis, C64>,
    ) -> Self {
        prune(&mut amplitudes);
        PureState {
            n_modes,
            truncation,
            amplitudes,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn amplitude(&self, occupations: &[u8]) -> C64 {
        self.amplitudes
            .get(&FockBasis::from(occupations))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Stored amplitudes in lexicographic order of occupation vectors.
    pub fn iter(&self) -> impl Iterator<Item = (&FockBasis, &C64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(C64::new(1.0 / Float::sqrt(n), 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let map = self.amplitudes.iter().map(|(k, a)| (k.clone(), a * c)).collect();
        Self::from_map(self.n_modes, self.truncation, map)
    }

    pub(crate) fn check_mode(&self, mode: ModeIndex) -> Result<()> {
        if mode.0 >= self.n_modes {
            Err(Error::ModeOutOfRange {
                mode: mode.0,
                n_modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    /// Tensor product; the modes of `other` follow those of `self`.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let truncation = self.truncation.merge(other.truncation);
        let n_modes = self.n_modes + other.n_modes;
        if n_modes > truncation.max_modes {
            return Err(Error::CapacityExceeded("too many modes"));
        }
        let mut map = BTreeMap::new();
        for (ka, a) in &self.amplitudes {
            for (kb, b) in &other.amplitudes {
                let mut occ = ka.0.clone();
                occ.extend_from_slice(&kb.0);
                let key = FockBasis(occ);
                truncation.check(&key)?;
                map.insert(key, a * b);
            }
        }
        Ok(Self::from_map(n_modes, truncation, map))
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.n_modes != other.n_modes {
            return Err(Error::ShapeMismatch {
                left: self.n_modes,
                right: other.n_modes,
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (k, a) in &self.amplitudes {
            if let Some(b) = other.amplitudes.get(k) {
                acc += a.conj() * b;
            }
        }
        Ok(acc)
    }

    /// `|⟨self|other⟩|²` for normalized inputs.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Contract `mode` with the bra `Σ_n bra[n] ⟨n|`.
    ///
    /// Returns the unnormalized state of the remaining modes together with its
    /// squared norm. Occupations beyond `bra.len()` contribute nothing. A zero
    /// weight means the outcome is impossible; the caller decides what that
    /// implies.
    pub fn project_mode(&self, mode: ModeIndex, bra: &[C64]) -> Result<(PureState, f64)> {
        self.check_mode(mode)?;
        if bra.len() > self.truncation.n_max as usize + 1 {
            return Err(Error::InvalidParameter("bra longer than n_max + 1"));
        }
        let mut map: BTreeMap<FockBasis, C64> = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            let n = k.get(mode.0) as usize;
            if let Some(b) = bra.get(n) {
                *map.entry(k.without(mode.0)).or_insert(C64::new(0.0, 0.0)) += b * a;
            }
        }
        let residual = Self::from_map(self.n_modes - 1, self.truncation, map);
        let weight = residual.norm_sqr();
        Ok((residual, weight))
    }

    /// Project several modes onto fixed occupations and remove them.
    pub fn project_occupations(&self, modes: &[ModeIndex], occupations: &[u8]) -> Result<(PureState, f64)> {
        if modes.len() != occupations.len() {
            return Err(Error::ShapeMismatch {
                left: modes.len(),
                right: occupations.len(),
            });
        }
        for &m in modes {
            self.check_mode(m)?;
        }
        let mut sorted: Vec<(usize, u8)> = modes.iter().map(|m| m.0).zip(occupations.iter().copied()).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("repeated mode"));
        }
        let mut map = BTreeMap::new();
        'outer: for (k, a) in &self.amplitudes {
            for &(m, n) in &sorted {
                if k.get(m) != n {
                    continue 'outer;
                }
            }
            let occ: Vec<u8> = k
                .0
                .iter()
                .enumerate()
                .filter(|(i, _)| sorted.binary_search_by_key(i, |s| s.0).is_err())
                .map(|(_, &n)| n)
                .collect();
            map.insert(FockBasis(occ), *a);
        }
        let residual = Self::from_map(self.n_modes - sorted.len(), self.truncation, map);
        let weight = residual.norm_sqr();
        Ok((residual, weight))
    }

    /// Phase shift `|n⟩ → e^{inδ}|n⟩` on one mode.
    pub fn apply_phase(&self, mode: ModeIndex, delta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let map = self
            .amplitudes
            .iter()
            .map(|(k, a)| (k.clone(), a * cis(delta * k.get(mode.0) as f64)))
            .collect();
        Ok(Self::from_map(self.n_modes, self.truncation, map))
    }

    /// Move mode `from` to position `to`, shifting the modes in between.
    pub fn move_mode(&self, from: ModeIndex, to: ModeIndex) -> Result<Self> {
        self.check_mode(from)?;
        self.check_mode(to)?;
        let map = self
            .amplitudes
            .iter()
            .map(|(k, a)| {
                let mut occ = k.0.clone();
                let n = occ.remove(from.0);
                occ.insert(to.0, n);
                (FockBasis(occ), *a)
            })
            .collect();
        Ok(Self::from_map(self.n_modes, self.truncation, map))
    }

    /// Largest occupation of `mode` carrying non-zero amplitude.
    pub fn max_occupation(&self, mode: ModeIndex) -> Result<u8> {
        self.check_mode(mode)?;
        Ok(self.amplitudes.keys().map(|k| k.get(mode.0)).max().unwrap_or(0))
    }

    /// Largest total photon number carrying non-zero amplitude.
    pub fn max_photon_number(&self) -> usize {
        self.amplitudes.keys().map(FockBasis::total).max().unwrap_or(0)
    }

    /// `⟨Σ n⟩` for a normalized state.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|(k, a)| k.total() as f64 * a.norm_sqr())
            .sum()
    }

    /// Split the state along `mode`: `|ψ⟩ = Σ_n |n⟩ ⊗ |r_n⟩`.
    ///
    /// Returns the distinct occupation vectors of the other modes and a dense
    /// `blocks[n][r]` table of amplitudes for `n = 0..=max_occupation(mode)`.
    pub(crate) fn blocks(&self, mode: ModeIndex) -> Result<(Vec<FockBasis>, Vec<Vec<C64>>)> {
        let n_top = self.max_occupation(mode)? as usize;
        let mut index: BTreeMap<FockBasis, usize> = BTreeMap::new();
        for k in self.amplitudes.keys() {
            let rest = k.without(mode.0);
            let next = index.len();
            index.entry(rest).or_insert(next);
        }
        // Renumber in key order so the layout does not depend on insertion.
        let rests: Vec<FockBasis> = index.keys().cloned().collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let mut blocks = vec![vec![C64::new(0.0, 0.0); rests.len()]; n_top + 1];
        for (k, a) in &self.amplitudes {
            let r = index[&k.without(mode.0)];
            blocks[k.get(mode.0) as usize][r] = *a;
        }
        Ok((rests, blocks))
    }

    /// Inverse of the measured-mode split: a state over `rests` with the given
    /// amplitudes.
    pub(crate) fn from_rests(truncation: Truncation, rests: &[FockBasis], amps: &[C64]) -> Self {
        let n_modes = rests.first().map(FockBasis::n_modes).unwrap_or(0);
        let map = rests.iter().cloned().zip(amps.iter().copied()).collect();
        Self::from_map(n_modes, truncation, map)
    }

    pub(crate) fn map_amplitudes(&self) -> &BTreeMap<FockBasis, C64> {
        &self.amplitudes
    }

    pub(crate) fn with_map(&self, n_modes: usize, map: BTreeMap<FockBasis, C64>) -> Result<Self> {
        for k in map.keys() {
            self.truncation.check(k)?;
        }
        Ok(Self::from_map(n_modes, self.truncation, map))
    }
}

fn prune(map: &mut BTreeMap<FockBasis, C64>) {
    let total: f64 = map.values().map(|a| a.norm_sqr()).sum();
    let threshold = PRUNE_EPS * total;
    map.retain(|_, a| a.norm_sqr() >= threshold && a.norm_sqr() > 0.0);
}
