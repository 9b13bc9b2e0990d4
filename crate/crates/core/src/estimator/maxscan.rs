use serde::{Deserialize, Serialize};

use super::stats::{quantile_sorted, sorted};
use crate::error::{Error, Result};
use crate::kernel;
use crate::solver::RatioField;

/// `M(R) = max_{|x| ≤ R} log U(t, x) − ½log(2πt)` for each radius.
pub fn max_profile(ratio: &RatioField, radii: &[f64]) -> Result<Vec<f64>> {
    let offset = kernel::log_ratio_offset(ratio.time)?;
    let last = ratio.x(ratio.len().saturating_sub(1));
    let reach = (-ratio.x0).min(last);
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) || r > reach + 1e-9 {
                return Err(Error::Domain(format!(
                    "radius {r} outside the simulated window [{}, {last}]",
                    ratio.x0
                )));
            }
            let mut best = f64::NEG_INFINITY;
            for (i, &v) in ratio.values.iter().enumerate() {
                if ratio.x(i).abs() <= r + 1e-9 {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::Numeric(format!("U = {v} at x = {}", ratio.x(i))));
                    }
                    best = best.max(v.ln());
                }
            }
            Ok(best - offset)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxScan {
    pub t: f64,
    pub radii: Vec<f64>,
    /// `½log(2πt)`.
    pub offset: f64,
    /// `M(R)` per replica, one row per replica.
    pub profiles: Vec<Vec<f64>>,
    pub median_max: Vec<f64>,
    /// Across-replica quantiles of `M(R)/(log R)^{2/3}`.
    pub ratio_q10: Vec<f64>,
    pub ratio_median: Vec<f64>,
    pub ratio_q90: Vec<f64>,
    pub lower_const: f64,
    pub upper_const: f64,
}

impl MaxScan {
    pub fn from_profiles(t: f64, radii: &[f64], profiles: Vec<Vec<f64>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InsufficientData("no replicas in the max scan".into()));
        }
        if radii.iter().any(|&r| !(r > 1.0)) {
            return Err(Error::Domain("normalization (log R)^{2/3} needs R > 1".into()));
        }
        let theory = kernel::theory_constants(t)?;
        let column = |k: usize, norm: f64| sorted(&profiles.iter().map(|p| p[k] / norm).collect::<Vec<_>>());
        let mut median_max = Vec::new();
        let (mut q10, mut q50, mut q90) = (Vec::new(), Vec::new(), Vec::new());
        for (k, &r) in radii.iter().enumerate() {
            median_max.push(quantile_sorted(&column(k, 1.0), 0.5));
            let c = column(k, r.ln().powf(2.0 / 3.0));
            q10.push(quantile_sorted(&c, 0.1));
            q50.push(quantile_sorted(&c, 0.5));
            q90.push(quantile_sorted(&c, 0.9));
        }
        Ok(Self {
            t,
            radii: radii.to_vec(),
            offset: kernel::log_ratio_offset(t)?,
            profiles,
            median_max,
            ratio_q10: q10,
            ratio_median: q50,
            ratio_q90: q90,
            lower_const: theory.lower_const,
            upper_const: theory.upper_const,
        })
    }

    /// Every per-replica profile is non-decreasing in `R`.
    pub fn profiles_monotone(&self) -> bool {
        self.profiles.iter().all(|p| p.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Median ratios all inside `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.ratio_median.iter().all(|&m| m >= lo && m <= hi)
    }
}

/// Scan of a single field.
pub fn spatial_max_scan(ratio: &RatioField, radii: &[f64]) -> Result<MaxScan> {
    MaxScan::from_profiles(ratio.time, radii, vec![max_profile(ratio, radii)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: Vec<f64>) -> RatioField {
        let n = values.len();
        RatioField {
            values,
            time: 2.0,
            x0: -((n / 2) as f64),
            dx: 1.0,
        }
    }

    #[test]
    fn unit_field_gives_offset() {
        let scan = spatial_max_scan(&field(vec![1.0; 41]), &[8.0]).unwrap();
        assert!((scan.profiles[0][0] + (4.0 * std::f64::consts::PI).ln() / 2.0).abs() < 1e-14);
        assert_eq!(scan.lower_const, 0.25);
    }

    #[test]
    fn nested_maxima_are_monotone() {
        let v: Vec<f64> = (0..41).map(|i| 1.0 + ((i * 7919) % 13) as f64).collect();
        let p = max_profile(&field(v), &[2.0, 8.0, 16.0, 20.0]).unwrap();
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn radius_beyond_window_is_domain_error() {
        assert!(matches!(max_profile(&field(vec![1.0; 11]), &[6.0]), Err(Error::Domain(_))));
    }
}
