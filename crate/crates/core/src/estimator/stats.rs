//! Small descriptive statistics shared by the estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub standard_error: f64,
}

impl MeanEstimate {
    pub fn of(x: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InsufficientData(format!("{} observations", x.len())));
        }
        Ok(Self {
            n: x.len(),
            mean: mean(x),
            standard_error: (variance(x) / x.len() as f64).sqrt(),
        })
    }

    /// `(mean − target)/SE`.
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target) / self.standard_error
    }
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(x: &[f64]) -> f64 {
    quantile_sorted(&sorted(x), 0.5)
}

/// Number of values `>= threshold` in sorted data.
pub fn count_at_least(sorted: &[f64], threshold: f64) -> usize {
    sorted.len() - sorted.partition_point(|&v| v < threshold)
}

/// Number of values `<= threshold` in sorted data.
pub fn count_at_most(sorted: &[f64], threshold: f64) -> usize {
    sorted.partition_point(|&v| v <= threshold)
}

/// Kolmogorov limiting survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

impl KsResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Two-sample Kolmogorov–Smirnov test with the Stephens small-sample
/// correction of the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample in KS test".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n1: a.len(),
        n2: b.len(),
    })
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points for a line fit", x.len())));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("line fit with a single abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(count_at_least(&s, 2.0), 3);
        assert_eq!(count_at_most(&s, 2.0), 2);
    }

    #[test]
    fn kolmogorov_distribution_values() {
        // Q(1.3581) = 0.05 and Q(1.9495) = 0.001 are the classical critical values.
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.949_5) - 0.001).abs() < 1e-5);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let s = NoiseStream::new(3, 0);
        let mut a = vec![0.0; 5000];
        let mut b = vec![0.0; 5000];
        s.fill_standard(0, 0, &mut a);
        s.fill_standard(1, 0, &mut b);
        assert!(!ks_two_sample(&a, &b).unwrap().rejects(1e-3));
        let shifted: Vec<f64> = b.iter().map(|v| v + 0.2).collect();
        assert!(ks_two_sample(&a, &shifted).unwrap().rejects(1e-3));
    }

    #[test]
    fn line_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
