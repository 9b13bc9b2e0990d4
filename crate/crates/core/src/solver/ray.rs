//! Ratio field integrated in ray coordinates.
//!
//! With `V(s, w) = U(s, w·s/t)` the ratio equation loses its drift:
//!
//! ```text
//! ∂_s V = ½(t/s)² ∂_w² V + V·η,
//! ```
//!
//! where `η` is white noise of intensity `t/s` per unit `w`. A cell of width
//! `h` therefore picks up log-variance `(t/h)·log(s₁/s₀)` over `[s₀, s₁]`, and
//! the heat part has variance time `t²(1/s₀ − 1/s₁)`. Both are translation
//! invariant in `w`, so on a periodic grid `V(t, ·)` is exactly stationary and
//! `E V = 1` holds for the discrete scheme.
//!
//! Early times only matter through scales comparable to the bridge width
//! `√(t(t−s)/s)` (in `w`), so the integration runs on a ladder of grids: level
//! `ℓ` has spacing `h·2^ℓ` and is used while that spacing is at most
//! `resolution` bridge widths. Each level is wide enough to hold the reported
//! window plus `margin` bridge widths; coarse levels are prolongated to finer
//! ones by linear interpolation. The interval `[0, s_min]` is replaced by one
//! spatially constant lognormal factor with the first-order chaos variance
//! `√(π s_min)/2`.

use serde::{Deserialize, Serialize};

use super::tridiag::PeriodicCn;
use super::RatioField;
use crate::error::{Error, Result};
use crate::noise::{NoiseStream, MAX_CELLS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayGrid {
    /// Output spacing `h` at the horizon.
    pub spacing: f64,
    /// Final time `t`.
    pub horizon: f64,
    /// Window center.
    pub center: f64,
    /// Reported window is `center ± half_width`.
    pub half_width: f64,
    /// Largest grid spacing per bridge width, `ε`.
    pub resolution: f64,
    /// Extra half-width per level, in bridge widths.
    pub margin: f64,
    /// Heat variance time per step, as a fraction of the squared spacing.
    pub step_guard: f64,
    /// `s_min / t`.
    pub start_fraction: f64,
}

impl RayGrid {
    pub const DEFAULT_RESOLUTION: f64 = 0.35;
    pub const DEFAULT_MARGIN: f64 = 5.0;
    pub const DEFAULT_STEP_GUARD: f64 = 0.4;
    pub const DEFAULT_START_FRACTION: f64 = 1e-6;

    pub fn new(spacing: f64, horizon: f64, center: f64, half_width: f64) -> Result<Self> {
        let g = Self {
            spacing,
            horizon,
            center,
            half_width,
            resolution: Self::DEFAULT_RESOLUTION,
            margin: Self::DEFAULT_MARGIN,
            step_guard: Self::DEFAULT_STEP_GUARD,
            start_fraction: Self::DEFAULT_START_FRACTION,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("spacing", self.spacing),
            ("horizon", self.horizon),
            ("resolution", self.resolution),
            ("margin", self.margin),
            ("step_guard", self.step_guard),
            ("start_fraction", self.start_fraction),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.half_width >= 0.0 && self.half_width.is_finite() && self.center.is_finite()) {
            return Err(Error::Config(format!(
                "window center {} half_width {} must be finite with half_width >= 0",
                self.center, self.half_width
            )));
        }
        if self.step_guard > 1.0 {
            return Err(Error::Config(format!(
                "step_guard {} > 1 breaks dt <= dx^2",
                self.step_guard
            )));
        }
        if self.resolution > 1.0 {
            return Err(Error::Config(format!("resolution {} > 1", self.resolution)));
        }
        if self.start_fraction >= 1.0 {
            return Err(Error::Config(format!(
                "start_fraction {} must be < 1",
                self.start_fraction
            )));
        }
        Ok(())
    }

    /// Cells on each side of the center in the reported window.
    pub fn window_half_cells(&self) -> usize {
        (self.half_width / self.spacing + 1e-9).floor() as usize
    }

    fn bridge_width(&self, s: f64) -> f64 {
        (self.horizon * (self.horizon - s) / s).sqrt()
    }
}

/// One grid of the ladder, `2m + 1` periodic cells.
#[derive(Debug, Clone)]
struct Level {
    spacing: f64,
    half_cells: usize,
    s_start: f64,
    s_end: f64,
    heat: PeriodicCn,
    sigmas: Vec<f64>,
}

/// Summary of one ladder level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub spacing: f64,
    pub cells: usize,
    pub steps: usize,
    pub s_start: f64,
    pub s_end: f64,
}

#[derive(Debug, Clone)]
pub struct RaySolver {
    grid: RayGrid,
    /// Coarsest first.
    levels: Vec<Level>,
    start_sigma: f64,
}

impl RaySolver {
    pub fn new(grid: &RayGrid) -> Result<Self> {
        grid.validate()?;
        let t = grid.horizon;
        let eps2 = grid.resolution * grid.resolution;
        let s_min = grid.start_fraction * t;
        let boundary = |l: usize| {
            if l == 0 {
                t
            } else {
                let h = grid.spacing * (1u64 << l) as f64;
                t / (1.0 + h * h / (eps2 * t))
            }
        };
        let mut levels = Vec::new();
        let mut l = 0usize;
        loop {
            if l > 60 {
                return Err(Error::Config("ray ladder exceeds 60 levels".into()));
            }
            let s_end = boundary(l);
            let s_start = boundary(l + 1).max(s_min);
            let h = grid.spacing * (1u64 << l) as f64;
            let reach = grid.half_width + grid.margin * grid.bridge_width(s_start);
            let mut m = (reach / h).ceil() as usize;
            if let Some(finer) = levels.last() {
                let finer: &Level = finer;
                m = m.max((finer.half_cells + 1) / 2 + 1);
            }
            m = m.max(1);
            if (2 * m + 1) as u64 > MAX_CELLS {
                return Err(Error::Config(format!("level {l} needs {} cells", 2 * m + 1)));
            }
            let inv_a = 1.0 / s_start;
            let inv_b = 1.0 / s_end;
            let variance_time = t * t * (inv_a - inv_b);
            let steps = ((variance_time / (grid.step_guard * h * h)) - 1e-9).ceil().max(1.0) as usize;
            let mu = variance_time / steps as f64 / (2.0 * h * h);
            let nodes: Vec<f64> = (0..=steps)
                .map(|k| 1.0 / (inv_a - (inv_a - inv_b) * k as f64 / steps as f64))
                .collect();
            let sigmas = nodes
                .windows(2)
                .map(|w| ((t / h) * (w[1] / w[0]).ln()).sqrt())
                .collect();
            levels.push(Level {
                spacing: h,
                half_cells: m,
                s_start,
                s_end,
                heat: PeriodicCn::new(2 * m + 1, mu),
                sigmas,
            });
            if s_start <= s_min {
                break;
            }
            l += 1;
        }
        levels.reverse();
        let start_sigma = ((std::f64::consts::PI * s_min).sqrt() / 2.0).sqrt();
        Ok(Self {
            grid: *grid,
            levels,
            start_sigma,
        })
    }

    pub fn grid(&self) -> &RayGrid {
        &self.grid
    }

    /// Ladder levels, coarsest first.
    pub fn levels(&self) -> Vec<LevelInfo> {
        self.levels
            .iter()
            .map(|l| LevelInfo {
                spacing: l.spacing,
                cells: 2 * l.half_cells + 1,
                steps: l.sigmas.len(),
                s_start: l.s_start,
                s_end: l.s_end,
            })
            .collect()
    }

    /// Cell updates per replica.
    pub fn cost(&self) -> usize {
        self.levels
            .iter()
            .map(|l| (2 * l.half_cells + 1) * l.sigmas.len())
            .sum()
    }

    /// `U(t, ·)` on `center ± half_width`. `noise = None` gives the
    /// deterministic flow, which keeps `V ≡ 1`.
    pub fn run(&self, noise: Option<&NoiseStream>) -> Result<RatioField> {
        let coarsest = &self.levels[0];
        let start = match noise {
            Some(s) => {
                let z = s.standard_at(0, 0);
                (self.start_sigma * z - 0.5 * self.start_sigma * self.start_sigma).exp()
            }
            None => 1.0,
        };
        let mut v = vec![start; 2 * coarsest.half_cells + 1];
        let mut next = Vec::new();
        let max_cells = self.levels.iter().map(|l| 2 * l.half_cells + 1).max().unwrap_or(0);
        let mut g = vec![0.0; max_cells];
        let mut scratch = vec![0.0; max_cells];
        let mut step = 1u64;
        for (li, level) in self.levels.iter().enumerate() {
            let n = 2 * level.half_cells + 1;
            if li > 0 {
                prolongate(&v, self.levels[li - 1].half_cells, &mut next, level.half_cells);
                std::mem::swap(&mut v, &mut next);
            }
            for &sigma in &level.sigmas {
                if let Some(s) = noise {
                    s.fill_standard(step, 0, &mut g[..n]);
                    let drift = -0.5 * sigma * sigma;
                    for (x, &z) in v.iter_mut().zip(&g[..n]) {
                        *x *= (sigma * z + drift).exp();
                    }
                }
                level.heat.apply(&mut v, &mut scratch[..n]);
                step += 1;
            }
            if let Some((i, &bad)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::Numeric(format!(
                    "V = {bad} at cell {i} of level spacing {} at s = {} (step {step})",
                    level.spacing, level.s_end
                )));
            }
        }
        let fine = self.levels.last().expect("ladder has a level");
        let k = self.grid.window_half_cells();
        let lo = fine.half_cells - k;
        Ok(RatioField {
            values: v[lo..=fine.half_cells + k].to_vec(),
            time: self.grid.horizon,
            x0: self.grid.center - k as f64 * self.grid.spacing,
            dx: self.grid.spacing,
        })
    }
}

/// Linear interpolation from a grid of spacing `2h` (half-cells `mc`) to
/// spacing `h` (half-cells `mf`), both centered at the same point.
fn prolongate(coarse: &[f64], mc: usize, fine: &mut Vec<f64>, mf: usize) {
    fine.clear();
    let mc = mc as isize;
    for i in -(mf as isize)..=(mf as isize) {
        let v = if i % 2 == 0 {
            coarse[(i / 2 + mc) as usize]
        } else {
            let a = (i - 1).div_euclid(2) + mc;
            0.5 * (coarse[a as usize] + coarse[(a + 1) as usize])
        };
        fine.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_covers_the_time_interval() {
        let g = RayGrid::new(0.05, 2.0, 0.0, 1.0).unwrap();
        let s = RaySolver::new(&g).unwrap();
        let levels = s.levels();
        assert!((levels[0].s_start - 2e-6).abs() < 1e-18);
        assert_eq!(levels.last().unwrap().s_end, 2.0);
        for w in levels.windows(2) {
            assert_eq!(w[0].s_end, w[1].s_start);
            assert!((w[0].spacing - 2.0 * w[1].spacing).abs() < 1e-12);
        }
        assert!(levels.iter().all(|l| l.steps > 0 && l.cells >= 3));
    }

    #[test]
    fn prolongation_interpolates_linearly() {
        let coarse: Vec<f64> = (-3..=3).map(|i| i as f64).collect();
        let mut fine = Vec::new();
        prolongate(&coarse, 3, &mut fine, 5);
        let expect: Vec<f64> = (-5..=5).map(|i| i as f64 / 2.0).collect();
        assert_eq!(fine, expect);
    }

    #[test]
    fn deterministic_flow_keeps_unit_field() {
        let g = RayGrid::new(0.1, 1.0, 3.0, 0.5).unwrap();
        let r = RaySolver::new(&g).unwrap().run(None).unwrap();
        assert_eq!(r.len(), 11);
        assert!((r.x0 - 2.5).abs() < 1e-12);
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let g = RayGrid::new(0.1, 1.0, 0.0, 0.3).unwrap();
        let solver = RaySolver::new(&g).unwrap();
        let a = solver.run(Some(&NoiseStream::new(5, 0))).unwrap();
        let b = solver.run(Some(&NoiseStream::new(5, 0))).unwrap();
        assert_eq!(a, b);
        let c = solver.run(Some(&NoiseStream::new(5, 1))).unwrap();
        assert_ne!(a.values, c.values);
        assert!(a.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        assert!(RayGrid::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(RayGrid::new(0.1, 1.0, 0.0, -1.0).is_err());
        let mut g = RayGrid::new(0.1, 1.0, 0.0, 1.0).unwrap();
        g.step_guard = 1.5;
        assert!(RaySolver::new(&g).is_err());
    }
}
