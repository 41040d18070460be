//! Two-mode beamsplitters, dual-rail qubit rotations and Bell resources.
//!
//! Beamsplitter convention, on creation operators of modes `m1`, `m2`:
//!
//! ```text
//! a1† → √η a1† + √(1−η) a2†
//! a2† → √(1−η) a1† − √η a2†
//! ```
//!
//! so `|1,0⟩ → √η|1,0⟩ + √(1−η)|0,1⟩`. The mode matrix is real, symmetric and
//! orthogonal, hence the beamsplitter is its own inverse.

use alloc::collections::BTreeMap;
use alloc::vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::ops::Mul;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, ModeIndex, PureState, Truncation};
use crate::math::{binomial, cis, sqrt_factorial};
use crate::C64;

/// Tolerance on `‖U†U − I‖` elementwise.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamsplitterSpec {
    pub m1: ModeIndex,
    pub m2: ModeIndex,
    /// Intensity reflectivity.
    pub eta: f64,
}

impl BeamsplitterSpec {
    pub fn new(m1: ModeIndex, m2: ModeIndex, eta: f64) -> Result<Self> {
        if m1 == m2 {
            return Err(Error::InvalidParameter("beamsplitter modes must differ"));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter("reflectivity must lie in [0, 1]"));
        }
        Ok(BeamsplitterSpec { m1, m2, eta })
    }

    pub fn balanced(m1: ModeIndex, m2: ModeIndex) -> Result<Self> {
        Self::new(m1, m2, 0.5)
    }
}

/// Qubit stored as one photon across two modes: `|0⟩_L = |0⟩_{rail0}|1⟩_{rail1}`,
/// `|1⟩_L = |1⟩_{rail0}|0⟩_{rail1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualRailQubit {
    pub rail0: ModeIndex,
    pub rail1: ModeIndex,
}

impl DualRailQubit {
    pub fn new(rail0: ModeIndex, rail1: ModeIndex) -> Result<Self> {
        if rail0 == rail1 {
            return Err(Error::InvalidParameter("dual-rail qubit needs two distinct rails"));
        }
        Ok(DualRailQubit { rail0, rail1 })
    }

    /// Two-mode state `c0|01⟩ + c1|10⟩` on rails 0 and 1 in that order.
    pub fn encode(c0: C64, c1: C64) -> Result<PureState> {
        PureState::from_amplitudes(2, Truncation::default(), [(vec![0, 1], c0), (vec![1, 0], c1)])
    }
}

/// Qubit stored as vacuum or one photon in a single mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingleRailQubit {
    pub mode: ModeIndex,
}

impl SingleRailQubit {
    pub fn new(mode: ModeIndex) -> Self {
        SingleRailQubit { mode }
    }

    /// One-mode state `c0|0⟩ + c1|1⟩`.
    pub fn encode(c0: C64, c1: C64) -> Result<PureState> {
        PureState::from_amplitudes(1, Truncation::default(), [(vec![0], c0), (vec![1], c1)])
    }
}

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2(pub [[C64; 2]; 2]);

impl Matrix2 {
    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Matrix2([[o, z], [z, o]])
    }

    pub fn hadamard() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Matrix2([[h, h], [h, -h]])
    }

    pub fn pauli_z() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Matrix2([[o, z], [z, -o]])
    }

    /// `exp(-i θ/2 σ_y)`.
    pub fn rotation_y(theta: f64) -> Self {
        let (s, c) = (Float::sin(theta / 2.0), Float::cos(theta / 2.0));
        Matrix2([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
    }

    /// `diag(1, e^{iφ})`.
    pub fn phase(phi: f64) -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Matrix2([[o, z], [z, cis(phi)]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Matrix2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = Matrix2::identity();
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p.0[i][j] - id.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > UNITARY_TOL || !deviation.is_finite() {
            Err(Error::NotUnitary { deviation })
        } else {
            Ok(())
        }
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Matrix2(out)
    }
}

/// Apply a beamsplitter to any Fock input.
///
/// Each basis vector `|n1, n2⟩` is expanded through the binomial theorem on the
/// transformed creation operators; this is exact within the truncation.
pub fn beamsplitter(s: &PureState, spec: &BeamsplitterSpec) -> Result<PureState> {
    s.check_mode(spec.m1)?;
    s.check_mode(spec.m2)?;
    if spec.m1 == spec.m2 {
        return Err(Error::InvalidParameter("beamsplitter modes must differ"));
    }
    let r = Float::sqrt(spec.eta);
    let t = Float::sqrt(1.0 - spec.eta);
    let (i1, i2) = (spec.m1.0, spec.m2.0);
    let n_max = s.truncation().n_max as usize;

    let mut out: BTreeMap<FockBasis, C64> = BTreeMap::new();
    for (key, amp) in s.map_amplitudes() {
        let n1 = key.get(i1) as usize;
        let n2 = key.get(i2) as usize;
        let norm_in = sqrt_factorial(n1) * sqrt_factorial(n2);
        // (r a1† + t a2†)^n1 (t a1† − r a2†)^n2
        for j in 0..=n1 {
            let c1 = binomial(n1, j) * Float::powi(r, j as i32) * Float::powi(t, (n1 - j) as i32);
            for k in 0..=n2 {
                let sign = if (n2 - k) % 2 == 1 { -1.0 } else { 1.0 };
                let c2 = sign * binomial(n2, k) * Float::powi(t, k as i32) * Float::powi(r, (n2 - k) as i32);
                let coeff = c1 * c2;
                if coeff == 0.0 {
                    continue;
                }
                let p = j + k;
                let q = (n1 - j) + (n2 - k);
                if p > n_max || q > n_max {
                    return Err(Error::TruncationExceeded {
                        occupation: p.max(q),
                        n_max: n_max as u8,
                    });
                }
                let weight = coeff * sqrt_factorial(p) * sqrt_factorial(q) / norm_in;
                let mut occ = key.occupations().to_vec();
                occ[i1] = p as u8;
                occ[i2] = q as u8;
                *out.entry(FockBasis::new(occ)).or_insert(C64::new(0.0, 0.0)) += amp * weight;
            }
        }
    }
    s.with_map(s.n_modes(), out)
}

/// Parameters of `U = e^{iλ} D(β) B(η) D(γ)` on the dual-rail logical basis,
/// with `D(δ) = diag(1, e^{iδ})` realised as a phase shift on `rail0` and
/// `B(η)` a beamsplitter from `rail0` to `rail1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RailDecomposition {
    pub global: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl RailDecomposition {
    pub fn solve(u: &Matrix2) -> Result<Self> {
        u.check_unitary()?;
        let m = &u.0;
        let r = m[0][0].norm().min(1.0);
        let t = Float::sqrt((1.0 - r * r).max(0.0));
        let eta = r * r;
        let (global, beta, gamma) = if r == 0.0 {
            let global = m[0][1].arg();
            (global, m[1][0].arg() - global, 0.0)
        } else if t == 0.0 {
            let global = (-m[0][0]).arg();
            (global, m[1][1].arg() - global, 0.0)
        } else {
            let global = (-m[0][0]).arg();
            (global, m[1][0].arg() - global, m[0][1].arg() - global)
        };
        Ok(RailDecomposition {
            global,
            beta,
            eta,
            gamma,
        })
    }

    /// The logical-basis matrix this decomposition implements.
    pub fn matrix(&self) -> Matrix2 {
        let r = Float::sqrt(self.eta);
        let t = Float::sqrt(1.0 - self.eta);
        let b = Matrix2([[C64::new(-r, 0.0), C64::new(t, 0.0)], [C64::new(t, 0.0), C64::new(r, 0.0)]]);
        let g = cis(self.global);
        let p = Matrix2::phase(self.beta) * b * Matrix2::phase(self.gamma);
        Matrix2([[g * p.0[0][0], g * p.0[0][1]], [g * p.0[1][0], g * p.0[1][1]]])
    }
}

/// Rotate a dual-rail qubit by `u` using phase shift, beamsplitter, phase shift.
///
/// The global phase of the decomposition is applied as a scalar so that
/// logical amplitudes transform exactly by `u`.
pub fn dual_rail_unitary(s: &PureState, q: &DualRailQubit, u: &Matrix2) -> Result<PureState> {
    let d = RailDecomposition::solve(u)?;
    let spec = BeamsplitterSpec::new(q.rail0, q.rail1, d.eta)?;
    let s = s.apply_phase(q.rail0, d.gamma)?;
    let s = beamsplitter(&s, &spec)?;
    let s = s.apply_phase(q.rail0, d.beta)?;
    Ok(s.scale(cis(d.global)))
}

/// `(|01⟩|10⟩ + |10⟩|01⟩)/√2` on modes 0–3, followed by `n_extra_modes` vacua.
pub fn dual_rail_bell(n_extra_modes: usize) -> Result<PureState> {
    let n = 4 + n_extra_modes;
    let mut a = vec![0u8; n];
    let mut b = vec![0u8; n];
    a[..4].copy_from_slice(&[0, 1, 1, 0]);
    b[..4].copy_from_slice(&[1, 0, 0, 1]);
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_amplitudes(n, Truncation::default(), [(a, h), (b, h)])
}

/// `(|01⟩ + |10⟩)/√2`.
pub fn single_rail_bell() -> Result<PureState> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_amplitudes(2, Truncation::default(), [(vec![0, 1], h), (vec![1, 0], h)])
}

/// Logical Z on a dual-rail qubit.
pub(crate) fn dual_rail_z(s: &PureState, q: &DualRailQubit) -> Result<PureState> {
    s.apply_phase(q.rail0, PI)
}
