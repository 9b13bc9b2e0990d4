//! Time stepping of `∂u = ½u'' + uξ` from `u(0) = δ₀`.
//!
//! [`direct`] integrates `u` itself on `[-L, L]`. [`ray`] integrates the
//! ratio field along rays `y = w·s/t`, which keeps it stationary in `w` and
//! lets a window around any point be simulated without resolving the
//! exponentially small mass of `u` out there.

pub mod direct;
pub mod ray;
pub mod tridiag;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use direct::{init_narrow_wedge, DirectSolver, Field, VALUE_FLOOR};
pub use ray::{RayGrid, RaySolver};

/// `U(t, ·) = u(t, ·)/p_t(·)` on a uniform grid `x_i = x0 + i·dx`.
///
/// Cells where `u` sat on the numeric floor hold `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioField {
    pub values: Vec<f64>,
    pub time: f64,
    pub x0: f64,
    pub dx: f64,
}

impl RatioField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Index of the grid point nearest to `x`; errors when `x` is off the
    /// grid by more than 1e-6 cells or outside it.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let k = (x - self.x0) / self.dx;
        let i = k.round();
        if (k - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.values.len() {
            return Err(Error::Domain(format!(
                "x = {x} is not a grid point of the ratio field [{}, {}] step {}",
                self.x0,
                self.x(self.values.len().saturating_sub(1)),
                self.dx
            )));
        }
        Ok(i as usize)
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        Ok(self.values[self.index_of(x)?])
    }

    /// `log U` at `x`, erroring like [`log_field`] on a non-positive value.
    pub fn log_at(&self, x: f64) -> Result<f64> {
        let i = self.index_of(x)?;
        checked_ln(self.values[i], self.x(i))
    }
}

fn checked_ln(v: f64, x: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(Error::Numeric(format!("ratio field value {v} at x = {x} has no logarithm")))
    }
}

/// `log U(t, ·)`. Subtract `½log(2πt)` to get `log u + x²/2t`.
pub fn log_field(ratio: &RatioField) -> Result<Vec<f64>> {
    ratio
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| checked_ln(v, ratio.x(i)))
        .collect()
}

/// Writes `x,u,U,logU` rows for a direct-solver snapshot.
pub fn write_snapshot_csv(path: &Path, field: &Field, ratio: &RatioField) -> Result<()> {
    let mut out = String::from("x,u,U,logU\n");
    for (i, (&u, &r)) in field.values.iter().zip(&ratio.values).enumerate() {
        let log = if r > 0.0 { r.ln() } else { f64::NAN };
        out.push_str(&format!("{},{:e},{:e},{:e}\n", ratio.x(i), u, r, log));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_of_unit_field_is_zero() {
        let r = RatioField {
            values: vec![1.0; 5],
            time: 2.0,
            x0: -1.0,
            dx: 0.5,
        };
        assert_eq!(log_field(&r).unwrap(), vec![0.0; 5]);
        assert_eq!(r.index_of(0.5).unwrap(), 3);
        assert!(r.index_of(0.3).is_err());
        assert!(r.index_of(1.5).is_err());
    }

    #[test]
    fn non_positive_value_is_numeric_error() {
        let r = RatioField {
            values: vec![1.0, 0.0, f64::NAN],
            time: 1.0,
            x0: 0.0,
            dx: 1.0,
        };
        assert!(matches!(log_field(&r), Err(Error::Numeric(_))));
        assert!(r.log_at(0.0).is_ok());
        assert!(r.log_at(2.0).is_err());
    }
}
