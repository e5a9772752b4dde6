//! Small Monte Carlo summaries: sample means, regenerative ratio
//! estimators and bootstrap standard errors.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    /// `|value - target| / std_error`; infinite when the SE is zero and the
    /// value misses.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            diff / self.std_error
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.value - target).abs() <= n_se * self.std_error
    }
}

/// Mean and standard error of the mean (n - 1 denominator).
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate::new(mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate::new(mean, (var / n as f64).sqrt())
}

/// Ratio `Σ num / Σ den` over i.i.d. cycles.
pub fn ratio(num: &[f64], den: &[f64]) -> f64 {
    let d: f64 = den.iter().sum();
    if d == 0.0 {
        0.0
    } else {
        num.iter().sum::<f64>() / d
    }
}

/// Delta-method standard error of the regenerative ratio estimator.
pub fn ratio_delta_se(num: &[f64], den: &[f64]) -> f64 {
    let n = num.len();
    if n < 2 {
        return 0.0;
    }
    let r = ratio(num, den);
    let mean_den = den.iter().sum::<f64>() / n as f64;
    let s2 = num
        .iter()
        .zip(den)
        .map(|(y, t)| (y - r * t).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    (s2 / n as f64).sqrt() / mean_den
}

/// Cycle bootstrap: resample cycles with replacement `resamples` times and
/// report the standard deviation of the resampled ratios.
pub fn ratio_bootstrap_se<R: Rng + ?Sized>(
    num: &[f64],
    den: &[f64],
    resamples: usize,
    rng: &mut R,
) -> f64 {
    let n = num.len();
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut sn, mut sd) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            sn += num[i];
            sd += den[i];
        }
        values.push(if sd > 0.0 { sn / sd } else { 0.0 });
    }
    sample_sd(&values)
}

/// Non-overlapping block bootstrap SE of the mean of a serially dependent
/// sequence.
pub fn block_bootstrap_se<R: Rng + ?Sized>(
    xs: &[f64],
    block: usize,
    resamples: usize,
    rng: &mut R,
) -> f64 {
    let block = block.max(1);
    let sums: Vec<f64> = xs.chunks(block).map(|c| c.iter().sum()).collect();
    let lens: Vec<f64> = xs.chunks(block).map(|c| c.len() as f64).collect();
    ratio_bootstrap_se(&sums, &lens, resamples, rng)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Lag-1 autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
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

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.6276 * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn mean_se_of_constant_is_exact() {
        let e = mean_se(&[2.0; 10]);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn ratio_of_proportional_cycles_has_zero_spread() {
        let den = [1.0, 2.0, 3.0, 4.0];
        let num: Vec<f64> = den.iter().map(|t| 0.5 * t).collect();
        assert_eq!(ratio(&num, &den), 0.5);
        assert!(ratio_delta_se(&num, &den) < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(ratio_bootstrap_se(&num, &den, 50, &mut rng) < 1e-15);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let a = [0.1, 0.4, 0.2, 0.9];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert!((ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_score_handles_zero_se() {
        assert_eq!(Estimate::new(1.0, 0.0).z_score(1.0), 0.0);
        assert!(Estimate::new(1.0, 0.0).z_score(2.0).is_infinite());
    }
}
