//! Small sample statistics used to compare simulations with predictions.

use alloc::vec::Vec;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na - j as f64 / nb));
    }
    d
}

/// One-sample Kolmogorov–Smirnov distance against a continuous cdf.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = sorted(xs);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// `½ Σ_{k ≤ k_max} |counts[k]/total − pmf(k)|`, with `total` the number of
/// samples (including those above `k_max`).
pub fn total_variation(counts: &[u64], total: u64, pmf: impl Fn(u64) -> f64, k_max: u64) -> f64 {
    let total = total as f64;
    0.5 * (0..=k_max)
        .map(|k| {
            let emp = counts.get(k as usize).copied().unwrap_or(0) as f64 / total;
            libm::fabs(emp - pmf(k))
        })
        .sum::<f64>()
}

/// Histogram of nonnegative integers.
pub fn histogram(xs: &[u64]) -> Vec<u64> {
    let mut h = Vec::new();
    for &x in xs {
        if h.len() <= x as usize {
            h.resize(x as usize + 1, 0);
        }
        h[x as usize] += 1;
    }
    h
}

/// Linear-interpolation quantile (`q ∈ [0, 1]`) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (xs.len() as f64 - 1.0))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [0.3, 1.0, 2.5, 2.5, 7.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]), 1.0);
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        assert!((ks_two_sample(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_one_sample(&xs, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((std_dev(&xs) - libm::sqrt(5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn tv_of_exact_histogram_is_zero() {
        let counts = vec![0, 1, 3];
        assert!(total_variation(&counts, 4, |k| [0.0, 0.25, 0.75][k as usize], 2) < 1e-15);
        assert_eq!(histogram(&[2, 2, 1, 2]), counts);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780_1).abs() < 1e-12);
    }
}
