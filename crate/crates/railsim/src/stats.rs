//! Goodness-of-fit statistics and sample summaries.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::statistics::Statistics;

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Sup-distance between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample KS distance over `n` samples, with
/// Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// p-value of a two-sample KS distance.
pub fn ks_two_sample_pvalue(d: f64, n: usize, m: usize) -> f64 {
    ks_pvalue(d, n * m / (n + m))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson's test of `samples` against `cdf` on the bins delimited by
/// `edges`, plus the two unbounded tails. Adjacent bins are pooled until each
/// expects at least five counts.
pub fn chi_square_gof<F: Fn(f64) -> f64>(samples: &[f64], edges: &[f64], cdf: F) -> ChiSquare {
    let n = samples.len() as f64;
    let mut observed = vec![0u64; edges.len() + 1];
    for &x in samples {
        let bin = edges.partition_point(|&e| e <= x);
        observed[bin] += 1;
    }
    let mut probs = Vec::with_capacity(edges.len() + 1);
    let mut prev = 0.0;
    for &e in edges {
        let f = cdf(e);
        probs.push(f - prev);
        prev = f;
    }
    probs.push(1.0 - prev);
    chi_square_counts(&observed, &probs, n)
}

/// Interior edges of `bins` cells of equal probability under `cdf`, found by
/// bisection on `[lo, hi]`.
pub fn equiprobable_edges<F: Fn(f64) -> f64>(cdf: F, bins: usize, lo: f64, hi: f64) -> Vec<f64> {
    (1..bins)
        .map(|j| {
            let target = j as f64 / bins as f64;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if cdf(m) < target {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Mann–Wald style bin count `2 n^{2/5}`, kept within `[5, 200]`.
pub fn default_bins(n: usize) -> usize {
    ((2.0 * (n as f64).powf(0.4)).round() as usize).clamp(5, 200)
}

/// Pearson's test of binned counts against cell probabilities.
pub fn chi_square_counts(observed: &[u64], probs: &[f64], n: f64) -> ChiSquare {
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc.0 += o as f64;
        acc.1 += p * n;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let statistic: f64 = pooled.iter().map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 }).sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        dist.sf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples outside `[lo, hi)`.
    pub outside: u64,
}

pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let mut counts = vec![0u64; bins];
    let mut outside = 0;
    let w = (hi - lo) / bins as f64;
    for &x in samples {
        if x >= lo && x < hi {
            let b = (((x - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        } else {
            outside += 1;
        }
    }
    Histogram { lo, hi, counts, outside }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub second_moment: f64,
}

pub fn moments(samples: &[f64]) -> Moments {
    let second_moment = samples.iter().map(|x| x * x).mean();
    let variance = if samples.len() < 2 { 0.0 } else { samples.variance() };
    Moments {
        mean: samples.mean(),
        variance,
        second_moment,
    }
}

/// Uniform CDF on `[0, 2π)`.
pub fn uniform_phase_cdf(theta: f64) -> f64 {
    (theta / std::f64::consts::TAU).clamp(0.0, 1.0)
}

/// CDF of `e^{−x²/2}(1+x²)/(2√(2π))`: `Φ(x) − x φ(x) / 2`.
pub fn split_homodyne_cdf(x: f64) -> f64 {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    std_normal.cdf(x) - 0.5 * x * pdf
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_on_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert_abs_diff_eq!(ks_statistic(&xs, |x| x), 0.005, epsilon = 1e-12);
        assert_abs_diff_eq!(ks_two_sample(&xs, &xs), 0.0);
        // ten and a half grid steps apart: eleven points of one sample lead
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.105).collect();
        assert_abs_diff_eq!(ks_two_sample(&xs, &shifted), 0.11, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_quantiles() {
        // tabulated critical values of the Kolmogorov distribution
        assert_abs_diff_eq!(kolmogorov_q(1.3581), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_q(1.6276), 0.01, epsilon = 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let probs = [0.25; 4];
        let c = chi_square_counts(&[25, 25, 25, 25], &probs, 100.0);
        assert_abs_diff_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 3);
        assert_abs_diff_eq!(c.p_value, 1.0, epsilon = 1e-12);
        // 9 + 3·1; the χ²₃ survival at 12 is 0.00738
        let c = chi_square_counts(&[40, 20, 20, 20], &probs, 100.0);
        assert_abs_diff_eq!(c.statistic, 12.0);
        assert_abs_diff_eq!(c.p_value, 0.007383, epsilon = 1e-5);
    }

    #[test]
    fn split_homodyne_cdf_matches_quadrature() {
        assert_abs_diff_eq!(split_homodyne_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(split_homodyne_cdf(-12.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(split_homodyne_cdf(12.0), 1.0, epsilon = 1e-15);
        // midpoint rule on the density
        let pdf = |x: f64| (-0.5 * x * x).exp() * (1.0 + x * x) / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
        let h = 1e-4;
        let integral: f64 = (0..110_000).map(|i| pdf(-10.0 + (i as f64 + 0.5) * h) * h).sum();
        assert_abs_diff_eq!(integral, split_homodyne_cdf(1.0), epsilon = 1e-6);
    }

    #[test]
    fn equiprobable_normal_edges() {
        let e = equiprobable_edges(normal_cdf, 4, -10.0, 10.0);
        assert_abs_diff_eq!(e[0], -0.6744897501960817, epsilon = 1e-9);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-12);
        assert_eq!(default_bins(100_000), 200);
        assert_eq!(default_bins(10), 5);
    }

    #[test]
    fn moments_and_histogram() {
        let m = moments(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(m.mean, 2.0);
        assert_abs_diff_eq!(m.variance, 1.0);
        assert_abs_diff_eq!(m.second_moment, 14.0 / 3.0, epsilon = 1e-12);
        let h = histogram(&[0.1, 0.2, 0.6, 1.5], 0.0, 1.0, 2);
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.outside, 1);
    }
}
