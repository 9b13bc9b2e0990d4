//! Gaussian heat kernel, its algebraic identities, and closed-form theory
//! constants used as oracles by the estimators.
//!
//! `p_t(x) = (2πt)^{-1/2} exp(-x²/(2t))` is the fundamental solution of
//! `∂_t = ½∂_x²`. Every function here is pure and thread-safe.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance used by [`covariance_integral_bound`].
pub const COVARIANCE_QUADRATURE_TOL: f64 = 1e-8;

/// Floor for relative comparisons, so two underflowed sides compare equal.
pub const RELATIVE_FLOOR: f64 = 1e-300;

fn check_time(name: &str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {t}")))
    }
}

fn check_space(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

/// `p_t(x)`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    check_time("t", t)?;
    check_space("x", x)?;
    Ok(heat_kernel_unchecked(t, x))
}

#[inline]
pub(crate) fn heat_kernel_unchecked(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// `log p_t(x)`, finite where `p_t(x)` itself underflows.
pub fn log_heat_kernel(t: f64, x: f64) -> Result<f64> {
    check_time("t", t)?;
    check_space("x", x)?;
    Ok(-x * x / (2.0 * t) - 0.5 * (2.0 * PI * t).ln())
}

/// Relative discrepancy `|lhs - rhs| / max(|lhs|, |rhs|, floor)`.
pub fn relative_error(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(RELATIVE_FLOOR)
}

/// Signature of a kernel implementation, so a perturbed kernel can be
/// injected into the identity suite.
pub type KernelFn = fn(f64, f64) -> f64;

/// The bridge identity
/// `p_{t-s}(a) p_s(b) / p_t(a+b) = p_{s(t-s)/t}(b - (s/t)(a+b))` for `0 < s < t`.
pub fn kernel_ratio_identity(s: f64, t: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    ratio_identity_with(heat_kernel_unchecked, s, t, a, b)
}

fn ratio_identity_with(p: KernelFn, s: f64, t: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    check_time("s", s)?;
    check_time("t", t)?;
    check_space("a", a)?;
    check_space("b", b)?;
    if s >= t {
        return Err(Error::Domain(format!("requires 0 < s < t, got s={s}, t={t}")));
    }
    let lhs = p(t - s, a) * p(s, b) / p(t, a + b);
    let rhs = p(s * (t - s) / t, b - (s / t) * (a + b));
    Ok((lhs, rhs))
}

/// `p_σ(x) p_τ(x) = p_{σ+τ}(0) p_{στ/(σ+τ)}(x)`.
pub fn kernel_product_identity(sigma: f64, tau: f64, x: f64) -> Result<(f64, f64)> {
    product_identity_with(heat_kernel_unchecked, sigma, tau, x)
}

fn product_identity_with(p: KernelFn, sigma: f64, tau: f64, x: f64) -> Result<(f64, f64)> {
    check_time("sigma", sigma)?;
    check_time("tau", tau)?;
    check_space("x", x)?;
    let lhs = p(sigma, x) * p(tau, x);
    let rhs = p(sigma + tau, 0.0) * p(sigma * tau / (sigma + tau), x);
    Ok((lhs, rhs))
}

/// `p_t(αx) = α^{-1} p_{t/α²}(x)`.
pub fn kernel_scaling_identity(t: f64, alpha: f64, x: f64) -> Result<(f64, f64)> {
    scaling_identity_with(heat_kernel_unchecked, t, alpha, x)
}

fn scaling_identity_with(p: KernelFn, t: f64, alpha: f64, x: f64) -> Result<(f64, f64)> {
    check_time("t", t)?;
    check_time("alpha", alpha)?;
    check_space("x", x)?;
    Ok((p(t, alpha * x), p(t / (alpha * alpha), x) / alpha))
}

/// Worst relative error of each identity over a batch of random inputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub seed: u64,
    pub ratio_max_rel_err: f64,
    pub product_max_rel_err: f64,
    pub scaling_max_rel_err: f64,
}

impl IdentityReport {
    pub fn max_rel_err(&self) -> f64 {
        self.ratio_max_rel_err
            .max(self.product_max_rel_err)
            .max(self.scaling_max_rel_err)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err() <= tol
    }
}

/// Evaluates all three identities on `samples` random inputs each.
///
/// Times are drawn from `(0.1, 5)` and positions from `(-3, 3)`, where the
/// exponent cancellations inside the ratio identity stay well inside double
/// precision.
pub fn identity_suite(samples: usize, seed: u64) -> IdentityReport {
    identity_suite_with(heat_kernel_unchecked, samples, seed)
}

/// [`identity_suite`] against an arbitrary kernel implementation.
pub fn identity_suite_with(p: KernelFn, samples: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = IdentityReport {
        samples,
        seed,
        ratio_max_rel_err: 0.0,
        product_max_rel_err: 0.0,
        scaling_max_rel_err: 0.0,
    };
    for _ in 0..samples {
        let t = rng.gen_range(0.1..5.0);
        let s = t * rng.gen_range(0.02..0.98);
        let a = rng.gen_range(-3.0..3.0);
        let b = rng.gen_range(-3.0..3.0);
        let (l, r) = ratio_identity_with(p, s, t, a, b).expect("inputs drawn inside domain");
        report.ratio_max_rel_err = report.ratio_max_rel_err.max(relative_error(l, r));

        let sigma = rng.gen_range(0.1..5.0);
        let tau = rng.gen_range(0.1..5.0);
        let x = rng.gen_range(-3.0..3.0);
        let (l, r) = product_identity_with(p, sigma, tau, x).expect("inputs drawn inside domain");
        report.product_max_rel_err = report.product_max_rel_err.max(relative_error(l, r));

        let alpha: f64 = rng.gen_range(0.2..5.0);
        let x = rng.gen_range(-3.0..3.0) / alpha.max(1.0);
        let (l, r) = scaling_identity_with(p, t, alpha, x).expect("inputs drawn inside domain");
        report.scaling_max_rel_err = report.scaling_max_rel_err.max(relative_error(l, r));
    }
    report
}

/// `∫₀¹ exp(-r x² / (4t(1-r))) dr / √(r(1-r))`, the integral that bounds the
/// covariance of `log U(t,x)` and `log U(t,0)` up to a constant.
///
/// The substitution `r = sin²φ` turns the endpoint singularities into the
/// smooth integrand `2 exp(-tan²φ · x²/(4t))` on `[0, π/2]`. Equals `π` at `x = 0`.
pub fn covariance_integral_bound(t: f64, x: f64) -> Result<f64> {
    check_time("t", t)?;
    check_space("x", x)?;
    let a = x * x / (4.0 * t);
    if a == 0.0 {
        return Ok(PI);
    }
    let integrand = |phi: f64| {
        let tan = phi.tan();
        2.0 * (-a * tan * tan).exp()
    };
    // The integrand lives on φ ≲ 1/√a; split there so the peak is resolved early.
    let knee = (8.0 / a.sqrt()).atan().min(0.5 * PI);
    let head = quadrature::integrate(integrand, 0.0, knee, 0.5 * COVARIANCE_QUADRATURE_TOL, 2000)?;
    let tail = if knee < 0.5 * PI {
        quadrature::integrate(
            integrand,
            knee,
            0.5 * PI,
            0.5 * COVARIANCE_QUADRATURE_TOL,
            2000,
        )?
        .value
    } else {
        0.0
    };
    Ok(head.value + tail)
}

/// Closed-form predictions evaluated at a fixed time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TheoryParams {
    pub t: f64,
    /// `(4/3)√(2/t)`: limit of `-log P(log U(t,0) ≥ θ) / θ^{3/2}`.
    pub tail_coefficient: f64,
    /// `¼(t/2)^{1/3}`: almost-sure lower bound on the normalized spatial maximum.
    pub lower_const: f64,
    /// `¾(2t/3)^{1/3}`: almost-sure upper bound on the normalized spatial maximum.
    pub upper_const: f64,
    /// `⅛√(t/2)`: supremum of admissible blocking levels β.
    pub blocking_beta_max: f64,
}

pub fn theory_constants(t: f64) -> Result<TheoryParams> {
    check_time("t", t)?;
    Ok(TheoryParams {
        t,
        tail_coefficient: 4.0 / 3.0 * (2.0 / t).sqrt(),
        lower_const: 0.25 * (t / 2.0).cbrt(),
        upper_const: 0.75 * (2.0 * t / 3.0).cbrt(),
        blocking_beta_max: 0.125 * (t / 2.0).sqrt(),
    })
}

/// `log u(t,x) + x²/(2t) = log U(t,x) - offset`, with this offset.
pub fn log_ratio_offset(t: f64) -> Result<f64> {
    check_time("t", t)?;
    Ok(0.5 * (2.0 * PI * t).ln())
}
