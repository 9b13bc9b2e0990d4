use serde::{Deserialize, Serialize};

use super::sample::SampleSet;
use super::stats::mean;
use crate::error::{Error, Result};
use crate::kernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub n: usize,
    pub covariance: f64,
    /// Delete-one jackknife standard error.
    pub standard_error: f64,
}

impl CovEstimate {
    pub fn z(&self) -> f64 {
        self.covariance / self.standard_error
    }
}

/// Unbiased covariance of paired observations with a jackknife SE.
///
/// The leave-one-out covariances have the closed form
/// `(S − n/(n−1)·dᵢeᵢ)/(n−2)` with `dᵢ, eᵢ` the centered values and `S`
/// the centered cross-product sum, so the jackknife is `O(n)`.
pub fn paired_covariance(a: &[f64], b: &[f64]) -> Result<CovEstimate> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "unpaired samples of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} pairs")));
    }
    let (ma, mb) = (mean(a), mean(b));
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let s: f64 = prods.iter().sum();
    let nf = n as f64;
    let covariance = s / (nf - 1.0);
    let loo: Vec<f64> = prods
        .iter()
        .map(|p| (s - nf / (nf - 1.0) * p) / (nf - 2.0))
        .collect();
    let m = mean(&loo);
    let var = (nf - 1.0) / nf * loo.iter().map(|c| (c - m) * (c - m)).sum::<f64>();
    Ok(CovEstimate {
        n,
        covariance,
        standard_error: var.sqrt(),
    })
}

/// `Cov(log U(t, x), log U(t, x0))` from one sample set.
pub fn log_covariance(samples: &SampleSet, x0: f64, x: f64) -> Result<CovEstimate> {
    paired_covariance(&samples.column_at(x)?, &samples.column_at(x0)?)
}

/// One row of the covariance-decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub x: f64,
    pub covariance: f64,
    pub standard_error: f64,
    /// `|Ĉov|·|x|` and its SE.
    pub product: f64,
    pub product_se: f64,
    /// Covariance integral `∫₀¹ e^{−rx²/(4t(1−r))} dr/√(r(1−r))`.
    pub integral_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub t: f64,
    pub rows: Vec<DecayRow>,
    /// `max |Ĉov(x)|·|x|`: the smallest `c` with `|Ĉov| ≤ c/|x|` on the rows.
    pub fitted_c: f64,
    /// Largest product divided by the first row's product.
    pub max_ratio_to_first: f64,
    /// Every consecutive product increase is within two combined SEs.
    pub non_increasing: bool,
    pub bounded: bool,
    pub bound_factor: f64,
}

/// Decay table for increasing `|x|`, compared against `bound_factor` times
/// the first product.
pub fn covariance_decay(t: f64, estimates: &[(f64, CovEstimate)], bound_factor: f64) -> Result<DecayReport> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no covariance estimates".into()));
    }
    let rows = estimates
        .iter()
        .map(|(x, e)| {
            Ok(DecayRow {
                x: *x,
                covariance: e.covariance,
                standard_error: e.standard_error,
                product: e.covariance.abs() * x.abs(),
                product_se: e.standard_error * x.abs(),
                integral_bound: kernel::covariance_integral_bound(t, *x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = rows[0].product;
    let fitted_c = rows.iter().map(|r| r.product).fold(0.0, f64::max);
    let max_ratio_to_first = fitted_c / first;
    let non_increasing = rows.windows(2).all(|w| {
        let se = (w[0].product_se.powi(2) + w[1].product_se.powi(2)).sqrt();
        w[1].product <= w[0].product + 2.0 * se
    });
    Ok(DecayReport {
        t,
        rows,
        fitted_c,
        max_ratio_to_first,
        non_increasing,
        bounded: max_ratio_to_first <= bound_factor,
        bound_factor,
    })
}
