//! `P{max_j log U(t, x_j) ≤ (β log R)^{2/3}}` on the blocking points
//! `x_j = 2jR/⌊R^a⌋`, `j = 1..⌊R^a⌋`.

use serde::{Deserialize, Serialize};

use super::sample::SampleSet;
use super::stats::{mean, variance};
use crate::error::{Error, Result};
use crate::kernel;

pub fn blocking_points(r: f64, a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && a < 1.0 / 6.0) {
        return Err(Error::Domain(format!("blocking exponent a = {a} outside (0, 1/6)")));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Domain(format!("blocking radius {r} must be >= 1")));
    }
    let k = r.powf(a).floor() as usize;
    Ok((1..=k).map(|j| 2.0 * j as f64 * r / k as f64).collect())
}

/// `(β log R)^{2/3}`.
pub fn blocking_level(beta: f64, r: f64) -> f64 {
    let v = beta * r.ln();
    v.signum() * v.abs().powf(2.0 / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingRow {
    pub r: f64,
    pub points: Vec<f64>,
    pub level: f64,
    pub n: usize,
    pub probability: f64,
    pub standard_error: f64,
    /// Change from the previous radius on the same replicas, with paired SE.
    pub change: Option<f64>,
    pub change_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingReport {
    pub t: f64,
    pub a: f64,
    pub beta: f64,
    pub rows: Vec<BlockingRow>,
    /// Every consecutive increase is at most two paired SEs.
    pub non_increasing: bool,
    pub warnings: Vec<String>,
}

fn indicators(samples: &SampleSet, r: f64, a: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let points = blocking_points(r, a)?;
    let idx = points
        .iter()
        .map(|&x| samples.label_index(x))
        .collect::<Result<Vec<_>>>()?;
    let level = blocking_level(beta, r);
    let ind = samples
        .rows()
        .map(|row| {
            let m = idx.iter().map(|&i| row[i]).fold(f64::NEG_INFINITY, f64::max);
            if m <= level {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok((ind, points, level))
}

/// Estimate and binomial SE at one radius.
pub fn blocking_probability(samples: &SampleSet, r: f64, a: f64, beta: f64) -> Result<(f64, f64)> {
    let (ind, _, _) = indicators(samples, r, a, beta)?;
    if ind.len() < 2 {
        return Err(Error::InsufficientData(format!("{} replicas", ind.len())));
    }
    let p = mean(&ind);
    Ok((p, (p * (1.0 - p) / ind.len() as f64).sqrt()))
}

/// Probabilities over increasing radii on the same replicas.
pub fn blocking_scan(samples: &SampleSet, t: f64, radii: &[f64], a: f64, beta: f64) -> Result<BlockingReport> {
    let theory = kernel::theory_constants(t)?;
    let mut warnings = Vec::new();
    if beta >= theory.blocking_beta_max {
        warnings.push(format!(
            "beta = {beta} >= {:.6}, outside the range where decay is proved",
            theory.blocking_beta_max
        ));
    }
    let proof_cap = a / theory.tail_coefficient;
    if beta >= proof_cap {
        warnings.push(format!("beta = {beta} >= a/tail_coefficient = {proof_cap:.6}"));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} replicas")));
    }
    let mut rows: Vec<BlockingRow> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for &r in radii {
        let (ind, points, level) = indicators(samples, r, a, beta)?;
        if points.len() == 1 {
            warnings.push(format!("R = {r}: a single blocking point"));
        }
        let p = mean(&ind);
        let (change, change_se) = match &prev {
            Some(q) => {
                let d: Vec<f64> = ind.iter().zip(q).map(|(x, y)| x - y).collect();
                (Some(mean(&d)), Some((variance(&d) / n as f64).sqrt()))
            }
            None => (None, None),
        };
        rows.push(BlockingRow {
            r,
            points,
            level,
            n,
            probability: p,
            standard_error: (p * (1.0 - p) / n as f64).sqrt(),
            change,
            change_se,
        });
        prev = Some(ind);
    }
    let non_increasing = rows.iter().all(|row| match (row.change, row.change_se) {
        (Some(c), Some(se)) => c <= 2.0 * se,
        _ => true,
    });
    Ok(BlockingReport {
        t,
        a,
        beta,
        rows,
        non_increasing,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts_follow_floor() {
        assert_eq!(blocking_points(16.0, 0.15).unwrap(), vec![32.0]);
        assert_eq!(blocking_points(128.0, 0.15).unwrap(), vec![128.0, 256.0]);
        assert_eq!(blocking_points(1024.0, 0.16).unwrap().len(), 3);
        assert!(blocking_points(16.0, 0.2).is_err());
        assert!(blocking_points(16.0, 0.0).is_err());
    }

    #[test]
    fn zero_beta_is_marginal_cdf_at_zero() {
        let rows: Vec<(u64, Vec<f64>)> = (0..10).map(|i| (i, vec![i as f64 - 4.5])).collect();
        let s = SampleSet::from_rows(vec![32.0], rows).unwrap();
        let (p, se) = blocking_probability(&s, 16.0, 0.15, 0.0).unwrap();
        assert_eq!(p, 0.5);
        assert!(se > 0.0);
    }

    #[test]
    fn missing_points_are_domain_errors() {
        let s = SampleSet::from_rows(vec![0.0], vec![(0, vec![0.0]), (1, vec![1.0])]).unwrap();
        assert!(matches!(blocking_probability(&s, 16.0, 0.15, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn scan_reports_paired_changes_and_warnings() {
        let rows: Vec<(u64, Vec<f64>)> = (0..100)
            .map(|i| (i, vec![(i % 10) as f64 / 10.0, (i % 7) as f64 / 7.0]))
            .collect();
        let s = SampleSet::from_rows(vec![32.0, 64.0], rows).unwrap();
        let r = blocking_scan(&s, 2.0, &[16.0, 32.0], 0.15, 0.2).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows[1].change.is_some());
        assert!(r.warnings.iter().any(|w| w.contains("0.125")));
    }
}
