//! Gaussian kernel density estimate of `log U(t, 0)` and the shape of its
//! upper tail.

use serde::{Deserialize, Serialize};

use super::stats::{count_at_least, fit_line, quantile_sorted, sorted, variance};
use crate::error::{Error, Result};

const GRID_POINTS: usize = 401;

/// `0.9·min(sd, IQR/1.34)·n^{−1/5}`.
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} observations", x.len())));
    }
    let s = sorted(x);
    let sd = variance(x).sqrt();
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (x.len() as f64).powf(-0.2);
    if !(h > 0.0) {
        return Err(Error::InsufficientData("zero spread, no bandwidth".into()));
    }
    Ok(h)
}

/// Density estimate at `points` from sorted data.
pub fn kde_sorted(sorted: &[f64], bandwidth: f64, points: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (sorted.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let reach = 9.0 * bandwidth;
    points
        .iter()
        .map(|&p| {
            let lo = sorted.partition_point(|&v| v < p - reach);
            let hi = sorted.partition_point(|&v| v <= p + reach);
            sorted[lo..hi]
                .iter()
                .map(|&v| {
                    let z = (p - v) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Fit of `−log P̂(X > y) ≈ A + B·y^κ` over the tail window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailShape {
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
    pub exponent: f64,
    /// `c₂` in `c₁e^{−c₂y^κ}`.
    pub coefficient: f64,
    /// `log c₁ = −A`.
    pub log_prefactor: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeReport {
    pub n: usize,
    pub bandwidth: f64,
    pub points: Vec<f64>,
    pub density: Vec<f64>,
    pub density_half: Vec<f64>,
    pub sup: f64,
    pub argsup: f64,
    /// Sup at half the bandwidth.
    pub sup_half: f64,
    /// `|sup_half/sup − 1|`.
    pub stability: f64,
    pub tail: Option<TailShape>,
}

impl KdeReport {
    pub fn stable_within(&self, tol: f64) -> bool {
        self.stability <= tol
    }
}

/// KDE sup at `bandwidth` (Silverman when `None`) and half of it, plus the
/// upper-tail shape fit on `P̂ ∈ [min_count/n, 0.1]`.
pub fn density_boundedness(samples: &[f64], bandwidth: Option<f64>, min_count: usize) -> Result<KdeReport> {
    let h = match bandwidth {
        Some(h) if !(h > 0.0 && h.is_finite()) => {
            return Err(Error::Domain(format!("bandwidth must be > 0, got {h}")));
        }
        Some(h) => h,
        None => silverman_bandwidth(samples)?,
    };
    let s = sorted(samples);
    let lo = s[0] - 3.0 * h;
    let hi = s[s.len() - 1] + 3.0 * h;
    let points: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let density = kde_sorted(&s, h, &points);
    let (imax, sup) = density
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    // Refine the sup near the coarse maximum for both bandwidths.
    let refine = |bw: f64, center: f64| {
        let fine: Vec<f64> = (0..201)
            .map(|k| center + (k as f64 - 100.0) / 100.0 * 2.0 * (hi - lo) / (GRID_POINTS - 1) as f64)
            .collect();
        kde_sorted(&s, bw, &fine).into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    let sup = refine(h, points[imax]).max(sup);
    let density_half = kde_sorted(&s, 0.5 * h, &points);
    let ihalf = density_half
        .iter()
        .enumerate()
        .fold(0, |best, (i, d)| if *d > density_half[best] { i } else { best });
    let sup_half = refine(0.5 * h, points[ihalf]).max(density_half[ihalf]);
    Ok(KdeReport {
        n: s.len(),
        bandwidth: h,
        argsup: points[imax],
        points,
        density,
        density_half,
        sup,
        sup_half,
        stability: (sup_half / sup - 1.0).abs(),
        tail: tail_shape(&s, min_count).ok(),
    })
}

/// Fits the upper-tail shape on 20 thresholds spread over the window where
/// the empirical survival lies in `[min_count/n, 0.1]` and `y > 0`.
pub fn tail_shape(sorted: &[f64], min_count: usize) -> Result<TailShape> {
    let n = sorted.len();
    if n < 10 * min_count {
        return Err(Error::InsufficientData(format!("{n} observations for a tail shape")));
    }
    let y_lo = quantile_sorted(sorted, 0.9).max(0.0);
    let y_hi = sorted[n - min_count];
    if !(y_hi > y_lo) {
        return Err(Error::InsufficientData("empty tail window".into()));
    }
    let m = 20;
    let thresholds: Vec<f64> = (0..m)
        .map(|k| y_lo + (y_hi - y_lo) * k as f64 / (m - 1) as f64)
        .filter(|&y| y > 0.0)
        .collect();
    let survival: Vec<f64> = thresholds
        .iter()
        .map(|&y| count_at_least(sorted, y) as f64 / n as f64)
        .collect();
    let neg_log: Vec<f64> = survival.iter().map(|p| -p.ln()).collect();
    let rss = |kappa: f64| -> Option<(f64, f64, f64)> {
        let x: Vec<f64> = thresholds.iter().map(|y| y.powf(kappa)).collect();
        let fit = fit_line(&x, &neg_log).ok()?;
        let r: f64 = x
            .iter()
            .zip(&neg_log)
            .map(|(a, b)| (fit.intercept + fit.slope * a - b).powi(2))
            .sum();
        Some((r, fit.slope, fit.intercept))
    };
    // Golden-section search for κ in [0.25, 4].
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.25f64, 4.0f64);
    let f = |k: f64| rss(k).map(|v| v.0).unwrap_or(f64::INFINITY);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let kappa = 0.5 * (a + b);
    let (r, slope, intercept) =
        rss(kappa).ok_or_else(|| Error::InsufficientData("degenerate tail window".into()))?;
    Ok(TailShape {
        exponent: kappa,
        coefficient: slope,
        log_prefactor: -intercept,
        rms_residual: (r / thresholds.len() as f64).sqrt(),
        thresholds,
        survival,
    })
}
