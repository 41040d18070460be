use core::f64::consts::TAU;

use num_traits::Float;

use crate::C64;

/// Reduce an angle to `[0, 2π)`; values that round to 2π map to 0.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let r = theta - TAU * Float::floor(theta / TAU);
    if r >= TAU || r < 0.0 {
        0.0
    } else {
        r
    }
}

#[inline]
pub(crate) fn cis(phase: f64) -> C64 {
    C64::new(Float::cos(phase), Float::sin(phase))
}

pub(crate) fn sqrt_factorial(n: usize) -> f64 {
    let mut acc = 1.0f64;
    for k in 2..=n {
        acc *= k as f64;
    }
    Float::sqrt(acc)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}
