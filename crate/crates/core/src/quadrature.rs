//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on a finite interval.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the 7-point rule on the odd Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` until the summed error estimate drops below
/// `abs_tol`, bisecting the worst segment each round.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!(
            "integration bounds must be finite with lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut segments = vec![kronrod(&f, lo, hi)];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{lo}, {hi}] after {} intervals",
                segments.len()
            )));
        }
        if error <= abs_tol {
            return Ok(Quadrature {
                value: total,
                error_estimate: error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{lo}, {hi}]: value {total:.12e}, \
                 error estimate {error:.3e} > tolerance {abs_tol:.3e} with {} intervals",
                segments.len()
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("segments is never empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        segments.push(kronrod(&f, seg.lo, mid));
        segments.push(kronrod(&f, mid, seg.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-13, 10).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((q.value - exact).abs() < 1e-12);
        assert_eq!(q.intervals, 1);
    }

    #[test]
    fn peaked_integrand_refines() {
        let q = integrate(|x| (-1e4 * x * x).exp(), -1.0, 1.0, 1e-12, 500).unwrap();
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        assert!((q.value - exact).abs() < 1e-11);
        assert!(q.intervals > 1);
    }

    #[test]
    fn budget_exhaustion_reports_diagnostics() {
        let err = integrate(|x| (50.0 * x).sin().abs(), 0.0, 10.0, 1e-15, 4).unwrap_err();
        assert!(matches!(err, Error::Numeric(msg) if msg.contains("did not converge")));
    }

    #[test]
    fn rejects_reversed_bounds() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-8, 10).is_err());
    }
}
