//! Positive dependence checks: the CDF gap `P(A ≤ a, B ≤ b) − P(A ≤ a)P(B ≤ b)`
//! on an empirical quantile grid, and covariances of monotone functionals.

use serde::{Deserialize, Serialize};

use super::covariance::{paired_covariance, CovEstimate};
use super::sample::SampleSet;
use super::stats::{count_at_most, quantile_sorted, sorted};
use crate::error::{Error, Result};

/// Levels `k/(m+1)` for `k = 1..=m`.
pub fn quantile_levels(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64 / (m + 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub a: f64,
    pub b: f64,
    pub joint: f64,
    pub product: f64,
    pub gap: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub cells: Vec<GapCell>,
    pub max_gap: f64,
    /// Smallest `gap/SE` over the grid.
    pub min_z: f64,
    /// Cells below `−3·SE`.
    pub violations: usize,
    pub covariance: CovEstimate,
    /// `max_gap / Ĉov^{1/3}`, undefined unless `Ĉov > 0`.
    pub ratio: Option<f64>,
    /// `Ĉov < −3·SE`.
    pub association_anomaly: bool,
}

/// Gap between the joint CDF and the product of marginals of paired
/// samples, with influence-function standard errors.
pub fn cdf_gap_test(a: &[f64], b: &[f64], levels: &[f64]) -> Result<GapReport> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "unpaired samples of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if levels.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::Domain("quantile levels must lie in (0, 1)".into()));
    }
    let covariance = paired_covariance(a, b)?;
    let n = a.len();
    let nf = n as f64;
    let (sa, sb) = (sorted(a), sorted(b));
    let qa: Vec<f64> = levels.iter().map(|&p| quantile_sorted(&sa, p)).collect();
    let qb: Vec<f64> = levels.iter().map(|&p| quantile_sorted(&sb, p)).collect();
    let fa: Vec<f64> = qa.iter().map(|&q| count_at_most(&sa, q) as f64 / nf).collect();
    let fb: Vec<f64> = qb.iter().map(|&q| count_at_most(&sb, q) as f64 / nf).collect();

    // 2-D histogram over the cut points, then cumulative sums.
    let m = levels.len();
    let bin = |q: &[f64], v: f64| q.partition_point(|&c| c < v);
    let mut hist = vec![0usize; (m + 1) * (m + 1)];
    for (x, y) in a.iter().zip(b) {
        hist[bin(&qa, *x) * (m + 1) + bin(&qb, *y)] += 1;
    }
    let mut cum = vec![0usize; (m + 1) * (m + 1)];
    for i in 0..=m {
        for j in 0..=m {
            let mut c = hist[i * (m + 1) + j];
            if i > 0 {
                c += cum[(i - 1) * (m + 1) + j];
            }
            if j > 0 {
                c += cum[i * (m + 1) + j - 1];
            }
            if i > 0 && j > 0 {
                c -= cum[(i - 1) * (m + 1) + j - 1];
            }
            cum[i * (m + 1) + j] = c;
        }
    }
    let mut cells = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let f12 = cum[i * (m + 1) + j] as f64 / nf;
            let (f1, f2) = (fa[i], fb[j]);
            // ψ = 1{A≤a,B≤b} − F₂·1{A≤a} − F₁·1{B≤b}
            let e_psi = f12 - 2.0 * f1 * f2;
            let e_psi2 = f12 + f2 * f2 * f1 + f1 * f1 * f2 - 2.0 * f2 * f12 - 2.0 * f1 * f12
                + 2.0 * f1 * f2 * f12;
            let var = (e_psi2 - e_psi * e_psi).max(0.0);
            cells.push(GapCell {
                a: qa[i],
                b: qb[j],
                joint: f12,
                product: f1 * f2,
                gap: f12 - f1 * f2,
                standard_error: (var / nf).sqrt(),
            });
        }
    }
    let max_gap = cells.iter().map(|c| c.gap).fold(f64::NEG_INFINITY, f64::max);
    let z = |c: &GapCell| {
        if c.standard_error > 0.0 {
            c.gap / c.standard_error
        } else if c.gap >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    };
    let min_z = cells.iter().map(z).fold(f64::INFINITY, f64::min);
    let violations = cells.iter().filter(|c| z(c) < -3.0).count();
    let ratio = (covariance.covariance > 0.0).then(|| max_gap / covariance.covariance.cbrt());
    Ok(GapReport {
        n,
        cells,
        max_gap,
        min_z,
        violations,
        covariance,
        ratio,
        association_anomaly: covariance.covariance < -3.0 * covariance.standard_error,
    })
}

/// Coordinatewise nondecreasing functionals of one replica's observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotoneFn {
    Projection(usize),
    /// Maximum over the listed coordinates.
    MaxOver(Vec<usize>),
    MinOver(Vec<usize>),
    /// `Σ max(vᵢ − τ, 0)` over all coordinates.
    SoftThresholdSum(f64),
    Sum,
}

impl MonotoneFn {
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            MonotoneFn::Projection(i) => row[*i],
            MonotoneFn::MaxOver(idx) => idx.iter().map(|&i| row[i]).fold(f64::NEG_INFINITY, f64::max),
            MonotoneFn::MinOver(idx) => idx.iter().map(|&i| row[i]).fold(f64::INFINITY, f64::min),
            MonotoneFn::SoftThresholdSum(tau) => row.iter().map(|v| (v - tau).max(0.0)).sum(),
            MonotoneFn::Sum => row.iter().sum(),
        }
    }

    pub fn name(&self, labels: &[f64]) -> String {
        let pts = |idx: &[usize]| {
            idx.iter()
                .map(|&i| format!("{}", labels[i]))
                .collect::<Vec<_>>()
                .join(";")
        };
        match self {
            MonotoneFn::Projection(i) => format!("proj({})", labels[*i]),
            MonotoneFn::MaxOver(idx) => format!("max({})", pts(idx)),
            MonotoneFn::MinOver(idx) => format!("min({})", pts(idx)),
            MonotoneFn::SoftThresholdSum(t) => format!("softsum({t})"),
            MonotoneFn::Sum => "sum".into(),
        }
    }
}

/// Ten fixed pairs of monotone functionals over the given points.
pub fn association_library(labels: &[f64]) -> Result<Vec<(MonotoneFn, MonotoneFn)>> {
    if labels.len() < 2 {
        return Err(Error::Domain("association library needs at least two points".into()));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let left: Vec<usize> = all.iter().copied().filter(|&i| labels[i] <= 0.0).collect();
    let right: Vec<usize> = all.iter().copied().filter(|&i| labels[i] > 0.0).collect();
    let (left, right) = if left.is_empty() || right.is_empty() {
        let half = labels.len() / 2;
        (all[..half].to_vec(), all[half..].to_vec())
    } else {
        (left, right)
    };
    let last = labels.len() - 1;
    use MonotoneFn::*;
    Ok(vec![
        (Projection(0), Projection(0)),
        (Projection(0), Projection(1)),
        (Projection(0), Projection(last)),
        (MaxOver(left.clone()), MaxOver(right.clone())),
        (MinOver(left.clone()), MaxOver(right.clone())),
        (SoftThresholdSum(0.0), Projection(0)),
        (SoftThresholdSum(1.0), MaxOver(all.clone())),
        (Sum, Projection(last)),
        (Sum, MinOver(all.clone())),
        (MaxOver(left), SoftThresholdSum(-1.0)),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub h1: String,
    pub h2: String,
    pub estimate: CovEstimate,
    /// `Ĉov ≥ −3·SE`.
    pub pass: bool,
}

pub fn association_test(samples: &SampleSet, h1: &MonotoneFn, h2: &MonotoneFn) -> Result<AssociationResult> {
    let a: Vec<f64> = samples.rows().map(|r| h1.eval(r)).collect();
    let b: Vec<f64> = samples.rows().map(|r| h2.eval(r)).collect();
    let estimate = paired_covariance(&a, &b)?;
    Ok(AssociationResult {
        h1: h1.name(samples.labels()),
        h2: h2.name(samples.labels()),
        estimate,
        pass: estimate.covariance >= -3.0 * estimate.standard_error,
    })
}
