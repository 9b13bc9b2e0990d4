//! Upper tail of `log U(t, 0)`: least-squares fit of `log P̂(X ≥ θ)` against
//! `θ^{3/2}`, with a bootstrap interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::stats::{count_at_least, fit_line, quantile_sorted, sorted};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Thresholds need at least this many exceedances.
    pub min_count: usize,
    pub min_replicas: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            min_count: 30,
            min_replicas: 100_000,
            bootstrap: 200,
            seed: 0x7a11,
        }
    }
}

/// `θ = 1.0, 1.25, …, 6.0`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=20).map(|k| 1.0 + 0.25 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub n: usize,
    pub thresholds: Vec<f64>,
    pub counts: Vec<usize>,
    pub survival: Vec<f64>,
    /// Thresholds that entered the fit.
    pub usable: Vec<bool>,
    /// `c` in `log P̂ ≈ b − c·θ^{3/2}`.
    pub coefficient: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bootstrap_replicates: usize,
}

impl TailFit {
    pub fn usable_count(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }

    /// `coefficient/target − 1`.
    pub fn relative_deviation(&self, target: f64) -> f64 {
        self.coefficient / target - 1.0
    }
}

fn coefficient_from_counts(thresholds: &[f64], counts: &[usize], n: usize) -> Result<(f64, f64)> {
    let x: Vec<f64> = thresholds.iter().map(|t| t.powf(1.5)).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok((-fit.slope, fit.intercept))
}

pub fn tail_fit(samples: &[f64], theta_grid: &[f64], opts: &TailOptions) -> Result<TailFit> {
    let n = samples.len();
    if n < opts.min_replicas {
        return Err(Error::InsufficientData(format!(
            "{n} replicas, tail fit needs at least {}",
            opts.min_replicas
        )));
    }
    if theta_grid.windows(2).any(|w| w[0] >= w[1]) || theta_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("theta grid must be positive and strictly increasing".into()));
    }
    let sorted = sorted(samples);
    let counts: Vec<usize> = theta_grid.iter().map(|&t| count_at_least(&sorted, t)).collect();
    let survival: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let usable: Vec<bool> = counts.iter().map(|&c| c >= opts.min_count && c < n).collect();
    let used: Vec<usize> = (0..counts.len()).filter(|&i| usable[i]).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable thresholds (need 3 with between {} and {} exceedances)",
            used.len(),
            opts.min_count,
            n - 1
        )));
    }
    let th: Vec<f64> = used.iter().map(|&i| theta_grid[i]).collect();
    let cs: Vec<usize> = used.iter().map(|&i| counts[i]).collect();
    let (coefficient, intercept) = coefficient_from_counts(&th, &cs, n)?;

    // Resampling replicas with replacement only moves mass between the bins
    // cut by the used thresholds, so the bootstrap draws those bins directly.
    let mut bins = Vec::with_capacity(cs.len() + 1);
    bins.push(n - cs[0]);
    for w in cs.windows(2) {
        bins.push(w[0] - w[1]);
    }
    bins.push(*cs.last().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut boot = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let mut remaining_n = n as u64;
        let mut remaining_p = 1.0;
        let mut drawn = Vec::with_capacity(bins.len());
        for (k, &b) in bins.iter().enumerate() {
            let c = if k + 1 == bins.len() || remaining_n == 0 {
                remaining_n
            } else {
                let p = ((b as f64 / n as f64) / remaining_p).clamp(0.0, 1.0);
                Binomial::new(remaining_n, p)
                    .map_err(|e| Error::Numeric(format!("bootstrap binomial: {e}")))?
                    .sample(&mut rng)
            };
            remaining_n -= c;
            remaining_p -= b as f64 / n as f64;
            drawn.push(c as usize);
        }
        let mut tail = 0usize;
        let mut bc = vec![0usize; cs.len()];
        for k in (0..cs.len()).rev() {
            tail += drawn[k + 1];
            bc[k] = tail;
        }
        if bc.iter().all(|&c| c > 0) {
            boot.push(coefficient_from_counts(&th, &bc, n)?.0);
        }
    }
    boot.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = if boot.len() >= 2 {
        (quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TailFit {
        n,
        thresholds: theta_grid.to_vec(),
        counts,
        survival,
        usable,
        coefficient,
        intercept,
        ci_low,
        ci_high,
        bootstrap_replicates: boot.len(),
    })
}

/// Draws with exact survival `P(X ≥ θ) = exp(−θ^{3/2})`, `θ ≥ 0`.
pub fn stretched_exponential_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            (-u.ln()).powf(2.0 / 3.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_oracle_is_recovered() {
        let x = stretched_exponential_samples(1_000_000, 9);
        let fit = tail_fit(&x, &default_theta_grid(), &TailOptions::default()).unwrap();
        assert!((fit.coefficient - 1.0).abs() < 0.05, "{}", fit.coefficient);
        assert!(fit.ci_low < fit.coefficient && fit.coefficient < fit.ci_high);
        assert!(fit.ci_high - fit.ci_low < 0.1);
        // log P̂ = −θ^{3/2} exactly in law, so the intercept is near zero.
        assert!(fit.intercept.abs() < 0.1);
    }

    #[test]
    fn survival_is_monotone_by_construction() {
        let x = stretched_exponential_samples(100_000, 1);
        let fit = tail_fit(&x, &default_theta_grid(), &TailOptions::default()).unwrap();
        assert!(fit.counts.windows(2).all(|w| w[0] >= w[1]));
        assert!(fit.usable.iter().zip(&fit.counts).all(|(u, c)| !u || *c >= 30));
    }

    #[test]
    fn degenerate_samples_are_insufficient() {
        let x = vec![0.5; 100_000];
        assert!(matches!(
            tail_fit(&x, &default_theta_grid(), &TailOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            tail_fit(&x[..10], &default_theta_grid(), &TailOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
