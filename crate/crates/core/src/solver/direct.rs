//! Lie–Trotter integrator for `u` on `[-L, L]` with zero Dirichlet data.
//!
//! Each step multiplies by `exp(√(Δt/Δx)·g − Δt/(2Δx))` and then takes one
//! Crank–Nicolson heat step. Values that fall below [`VALUE_FLOOR`] (the
//! far tails of the discrete delta underflow at once) are clamped back to
//! it; the ratio field reports `NaN` wherever the final `u` is within
//! [`RATIO_VALID_MARGIN`] of the floor.

use serde::{Deserialize, Serialize};

use super::tridiag::DirichletCn;
use super::RatioField;
use crate::error::{Error, Result};
use crate::kernel;
use crate::noise::{GridSpec, NoiseStream};

pub const VALUE_FLOOR: f64 = 1e-300;

/// Final values below `VALUE_FLOOR * RATIO_VALID_MARGIN` carry no
/// information about `U`.
pub const RATIO_VALID_MARGIN: f64 = 1e20;

/// One time slice of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
    pub time: f64,
    pub grid: GridSpec,
}

impl Field {
    /// `Σ u·Δx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx
    }
}

/// `1/Δx` in the center cell, floor elsewhere.
pub fn init_narrow_wedge(grid: &GridSpec) -> Result<Field> {
    grid.validate()?;
    let n = grid.n_cells();
    if n % 2 == 0 {
        return Err(Error::Config(format!("grid has {n} cells and no center cell")));
    }
    let mut values = vec![VALUE_FLOOR; n];
    values[grid.center_cell()] = 1.0 / grid.dx;
    Ok(Field {
        values,
        time: 0.0,
        grid: *grid,
    })
}

/// Multiplicative noise substep with standard draws `g` (Itô-corrected).
pub fn apply_noise(values: &mut [f64], g: &[f64], dt: f64, dx: f64) {
    let sigma = (dt / dx).sqrt();
    let drift = -0.5 * dt / dx;
    for (v, &z) in values.iter_mut().zip(g) {
        *v *= (sigma * z + drift).exp();
    }
}

#[derive(Debug, Clone)]
pub struct DirectSolver {
    grid: GridSpec,
    dt: f64,
    heat: DirichletCn,
}

impl DirectSolver {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        let dt = grid.effective_dt();
        Ok(Self {
            grid: *grid,
            dt,
            heat: DirichletCn::new(grid.n_cells(), dt / (2.0 * grid.dx * grid.dx)),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Advances `field` by one step. `noise = None` runs the heat flow only.
    pub fn step(&self, field: &mut Field, noise: Option<&NoiseStream>, step_index: usize) -> Result<()> {
        let mut g = vec![0.0; field.values.len()];
        let mut scratch = vec![0.0; field.values.len()];
        self.step_with(field, noise, step_index, &mut g, &mut scratch)
    }

    fn step_with(
        &self,
        field: &mut Field,
        noise: Option<&NoiseStream>,
        step_index: usize,
        g: &mut [f64],
        scratch: &mut [f64],
    ) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::Contract("field grid differs from solver grid".into()));
        }
        if field.time + self.dt > self.grid.horizon * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "step from time {} by {} passes the horizon {}",
                field.time, self.dt, self.grid.horizon
            )));
        }
        if let Some(stream) = noise {
            stream.fill_standard(step_index as u64, 0, g);
            apply_noise(&mut field.values, g, self.dt, self.grid.dx);
        }
        self.heat.apply(&mut field.values, scratch);
        for (i, v) in field.values.iter_mut().enumerate() {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "u = {v} at cell {i} (x = {}) after step {step_index}, time {}",
                    self.grid.x(i),
                    field.time + self.dt
                )));
            }
            if *v < VALUE_FLOOR {
                *v = VALUE_FLOOR;
            }
        }
        field.time = (step_index + 1) as f64 * self.dt;
        Ok(())
    }

    /// All `n_steps` steps from the narrow wedge; returns `u(t)` and `U(t)`.
    pub fn run(&self, noise: Option<&NoiseStream>) -> Result<(Field, RatioField)> {
        let mut field = init_narrow_wedge(&self.grid)?;
        let n = field.values.len();
        let mut g = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        for k in 0..self.grid.n_steps() {
            self.step_with(&mut field, noise, k, &mut g, &mut scratch)?;
        }
        field.time = self.grid.horizon;
        let ratio = ratio_field(&field)?;
        Ok((field, ratio))
    }
}

/// `u/p_t` cellwise, `NaN` where `u` is indistinguishable from the floor.
pub fn ratio_field(field: &Field) -> Result<RatioField> {
    let grid = &field.grid;
    let t = field.time;
    let values = field
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let x = grid.x(i);
            if u <= VALUE_FLOOR * RATIO_VALID_MARGIN {
                return Ok(f64::NAN);
            }
            Ok((u.ln() - kernel::log_heat_kernel(t, x)?).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RatioField {
        values,
        time: t,
        x0: grid.x(0),
        dx: grid.dx,
    })
}
