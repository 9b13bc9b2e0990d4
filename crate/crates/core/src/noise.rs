//! Reproducible discretized space-time white noise.
//!
//! Every draw is a pure function of its address `(seed, replica, step, cell)`:
//! a ChaCha8 keystream keyed by a 256-bit expansion of the seed, with the
//! replica as stream id and `(step, cell)` as the word position. Gaussian
//! values come from the inverse normal CDF of the 53-bit uniform output, so no
//! rejection state exists and any slice can be regenerated in isolation.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Space-time discretization of the physical (u-frame) domain `[-L, L] × [0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell width Δx.
    pub dx: f64,
    /// Maximum time step; the effective step is `horizon / n_steps`.
    pub dt: f64,
    /// Half-width L of the domain.
    pub half_width: f64,
    /// Final time t.
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(dx: f64, dt: f64, half_width: f64, horizon: f64) -> Result<Self> {
        let grid = Self {
            dx,
            dt,
            half_width,
            horizon,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dx", self.dx),
            ("dt", self.dt),
            ("half_width", self.half_width),
            ("horizon", self.horizon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.dt > self.dx * self.dx {
            return Err(Error::Config(format!(
                "stability requires dt <= dx^2, got dt={} > dx^2={}",
                self.dt,
                self.dx * self.dx
            )));
        }
        if self.half_width < self.dx {
            return Err(Error::Config(format!(
                "half_width {} smaller than one cell {}",
                self.half_width, self.dx
            )));
        }
        Ok(())
    }

    /// Checks the boundary margin `L >= r_max + 6√t`.
    pub fn check_margin(&self, r_max: f64) -> Result<()> {
        let need = r_max + 6.0 * self.horizon.sqrt();
        if self.half_width + 1e-12 < need {
            return Err(Error::Config(format!(
                "half_width {} below r_max + 6*sqrt(t) = {need}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Cells on one side of the origin, `⌊L/Δx⌋`.
    pub fn half_cells(&self) -> usize {
        (self.half_width / self.dx + 1e-9).floor() as usize
    }

    /// `2⌊L/Δx⌋ + 1`, always odd so the origin is a cell center.
    pub fn n_cells(&self) -> usize {
        2 * self.half_cells() + 1
    }

    /// `⌈t/Δt⌉`.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Time step actually taken, `t / n_steps <= dt`.
    pub fn effective_dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn x(&self, cell: usize) -> f64 {
        (cell as f64 - self.half_cells() as f64) * self.dx
    }

    pub fn center_cell(&self) -> usize {
        self.half_cells()
    }

    /// Index of the cell whose center is `x`, if `x` lies on the grid.
    pub fn cell_of(&self, x: f64) -> Result<usize> {
        let k = x / self.dx + self.half_cells() as f64;
        let idx = k.round();
        if (k - idx).abs() > 1e-6 || idx < 0.0 || idx as usize >= self.n_cells() {
            return Err(Error::Domain(format!(
                "x = {x} is not a cell center of the grid (dx = {}, L = {})",
                self.dx, self.half_width
            )));
        }
        Ok(idx as usize)
    }
}

/// A seeded, counter-addressed source of standard Gaussian draws.
#[derive(Clone)]
pub struct NoiseStream {
    seed: u64,
    replica: u64,
    key: [u8; 32],
}

impl std::fmt::Debug for NoiseStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseStream")
            .field("seed", &self.seed)
            .field("replica", &self.replica)
            .finish()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps a 64-bit word to the open interval `(0, 1)`.
#[inline(always)]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Cells addressable per step.
pub const MAX_CELLS: u64 = 1 << 32;

impl NoiseStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { seed, replica, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    fn cursor(&self, step: u64, first_cell: u64) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(self.replica);
        // Two 32-bit keystream words per draw.
        rng.set_word_pos(((step as u128) * MAX_CELLS as u128 + first_cell as u128) * 2);
        rng
    }

    /// Fills `out` with the N(0,1) draws at cells `first_cell..first_cell + out.len()`.
    pub fn fill_standard(&self, step: u64, first_cell: u64, out: &mut [f64]) {
        debug_assert!(first_cell + out.len() as u64 <= MAX_CELLS);
        let mut rng = self.cursor(step, first_cell);
        for v in out.iter_mut() {
            *v = normal::inverse_cdf(open_unit(rng.next_u64()));
        }
    }

    /// The single N(0,1) draw at `(step, cell)`.
    pub fn standard_at(&self, step: u64, cell: u64) -> f64 {
        let mut rng = self.cursor(step, cell);
        normal::inverse_cdf(open_unit(rng.next_u64()))
    }

    /// One time slice of cell-averaged white noise on `grid`: each value is
    /// N(0, 1/(Δt·Δx)) with Δt the grid's effective step.
    pub fn sample_slice(&self, grid: &GridSpec, step: usize) -> Result<Vec<f64>> {
        let n_steps = grid.n_steps();
        if step >= n_steps {
            return Err(Error::Index {
                index: step,
                limit: n_steps,
            });
        }
        let mut out = vec![0.0; grid.n_cells()];
        self.fill_standard(step as u64, 0, &mut out);
        let scale = 1.0 / (grid.effective_dt() * grid.dx).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }
}

/// Outcome of [`scaled_noise_check`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScaledNoiseReport {
    pub samples: usize,
    /// `1/(Δt'Δx')` on the doubled grid `Δt' = 2Δt`, `Δx' = 2Δx`.
    pub expected_variance: f64,
    /// Empirical variance of half the original cell values.
    pub halved_variance: f64,
    pub halved_se: f64,
    /// Empirical variance of the 2×2 block averages.
    pub coarsened_variance: f64,
    pub coarsened_se: f64,
    pub pass: bool,
}

fn variance_with_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m4) = values.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d = (v - mean) * (v - mean);
        (m2 + d, m4 + d * d)
    });
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    (var, se)
}

/// Checks, on explicit noise values, the variance scaling behind the
/// statement that `½ξ(s/2, y/2)` is again a white noise.
///
/// `cells` holds values of cells of size `dt × dx`, laid out as `steps` rows
/// of `width` columns. Two constructions must both reproduce a white noise on
/// the doubled grid (variance `1/(4ΔtΔx)`) within three standard errors:
/// halving each original cell, and averaging each 2×2 block.
pub fn scaled_noise_check_values(
    cells: &[f64],
    width: usize,
    dt: f64,
    dx: f64,
) -> Result<ScaledNoiseReport> {
    if width < 2 || cells.len() < 4 || cells.len() % width != 0 {
        return Err(Error::InsufficientData(format!(
            "need a steps × width layout with at least 2×2 cells, got {} values, width {width}",
            cells.len()
        )));
    }
    let steps = cells.len() / width;
    let expected = 1.0 / (4.0 * dt * dx);
    let halved: Vec<f64> = cells.iter().map(|v| 0.5 * v).collect();
    let mut blocks = Vec::with_capacity((steps / 2) * (width / 2));
    for r in (0..steps - steps % 2).step_by(2) {
        for c in (0..width - width % 2).step_by(2) {
            let s = cells[r * width + c]
                + cells[r * width + c + 1]
                + cells[(r + 1) * width + c]
                + cells[(r + 1) * width + c + 1];
            blocks.push(0.25 * s);
        }
    }
    let (hv, hse) = variance_with_se(&halved);
    let (cv, cse) = if blocks.len() >= 2 {
        variance_with_se(&blocks)
    } else {
        (f64::NAN, f64::NAN)
    };
    let within = |v: f64, se: f64| se > 0.0 && (v - expected).abs() <= 3.0 * se;
    Ok(ScaledNoiseReport {
        samples: cells.len(),
        expected_variance: expected,
        halved_variance: hv,
        halved_se: hse,
        coarsened_variance: cv,
        coarsened_se: cse,
        pass: within(hv, hse) && within(cv, cse),
    })
}

/// Draws `n` noise cells from `stream` on `grid` (consecutive time slices,
/// truncated to an even width) and runs [`scaled_noise_check_values`].
pub fn scaled_noise_check(
    stream: &NoiseStream,
    grid: &GridSpec,
    n: usize,
) -> Result<ScaledNoiseReport> {
    if n < 10_000 {
        return Err(Error::InsufficientData(format!("need n >= 10^4 cells, got {n}")));
    }
    let width = grid.n_cells() & !1;
    let steps = n.div_ceil(width).next_multiple_of(2);
    if steps > grid.n_steps() {
        return Err(Error::Index {
            index: steps,
            limit: grid.n_steps(),
        });
    }
    let mut cells = Vec::with_capacity(steps * width);
    for step in 0..steps {
        let slice = stream.sample_slice(grid, step)?;
        cells.extend_from_slice(&slice[..width]);
    }
    scaled_noise_check_values(&cells, width, grid.effective_dt(), grid.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn grid() -> GridSpec {
        GridSpec::new(0.05, 0.001, 25.0, 2.0).unwrap()
    }

    #[test]
    fn grid_counts() {
        let g = grid();
        assert_eq!(g.n_cells(), 1001);
        assert_eq!(g.n_steps(), 2000);
        assert_eq!(g.center_cell(), 500);
        assert_eq!(g.x(500), 0.0);
        assert_eq!(g.cell_of(2.0).unwrap(), 540);
        assert!(g.cell_of(0.01).is_err());
        assert!(g.cell_of(30.0).is_err());
        let odd = GridSpec::new(0.1, 0.003, 1.0, 0.01).unwrap();
        assert_eq!(odd.n_steps(), 4);
        assert!(odd.effective_dt() <= odd.dt);
    }

    #[test]
    fn grid_rejects_unstable_and_degenerate() {
        assert!(matches!(GridSpec::new(0.1, 0.02, 5.0, 1.0), Err(Error::Config(_))));
        assert!(GridSpec::new(0.0, 0.01, 5.0, 1.0).is_err());
        assert!(GridSpec::new(0.1, 0.01, -5.0, 1.0).is_err());
        assert!(GridSpec::new(0.1, 0.01, 5.0, f64::NAN).is_err());
        let g = GridSpec::new(0.1, 0.01, 10.0, 2.0).unwrap();
        assert!(g.check_margin(1.0).is_ok());
        assert!(g.check_margin(2.0).is_err());
    }

    #[test]
    fn same_address_same_bits() {
        let s = NoiseStream::new(42, 3);
        let a = s.sample_slice(&grid(), 17).unwrap();
        let b = NoiseStream::new(42, 3).sample_slice(&grid(), 17).unwrap();
        assert_eq!(a, b);
        let scale = 1.0 / (grid().effective_dt() * grid().dx).sqrt();
        assert_eq!(a[250], s.standard_at(17, 250) * scale);
        let mut part = vec![0.0; 10];
        s.fill_standard(17, 250, &mut part);
        assert_eq!(part[0] * scale, a[250]);
    }

    #[test]
    fn out_of_range_step() {
        let g = grid();
        let err = NoiseStream::new(1, 0).sample_slice(&g, g.n_steps()).unwrap_err();
        assert!(matches!(err, Error::Index { .. }));
    }

    fn draws(stream: &NoiseStream, n: usize, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (step, chunk) in out.chunks_mut(width).enumerate() {
            stream.fill_standard(step as u64, 0, chunk);
        }
        out
    }

    #[test]
    fn slice_moments_match_white_noise() {
        let g = grid();
        let s = NoiseStream::new(9, 0);
        let mut values = Vec::new();
        let mut step = 0;
        while values.len() < 1_000_000 {
            values.extend(s.sample_slice(&g, step).unwrap());
            step += 1;
        }
        values.truncate(1_000_000);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 1.0 / (g.effective_dt() * g.dx);
        assert!(mean.abs() <= 4.0 * target.sqrt() / 1e3, "mean {mean}");
        assert!((var / target - 1.0).abs() <= 0.01, "var {var} target {target}");
    }

    #[test]
    fn kolmogorov_smirnov_against_standard_normal() {
        let mut v = draws(&NoiseStream::new(2024, 5), 100_000, 997);
        v.sort_by(f64::total_cmp);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = v.len() as f64;
        let d = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = normal.cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        // Asymptotic critical value at significance 1e-3: sqrt(-ln(α/2)/2).
        let critical = (-(0.0005f64).ln() / 2.0).sqrt() / n.sqrt();
        assert!(d < critical, "D = {d}, critical {critical}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn lag_one_autocorrelations_vanish() {
        let width = 500;
        let steps = 400;
        let s = NoiseStream::new(77, 1);
        let v = draws(&s, width * steps, width);
        let mut spatial = (Vec::new(), Vec::new());
        let mut temporal = (Vec::new(), Vec::new());
        for r in 0..steps {
            for c in 0..width {
                if c + 1 < width {
                    spatial.0.push(v[r * width + c]);
                    spatial.1.push(v[r * width + c + 1]);
                }
                if r + 1 < steps {
                    temporal.0.push(v[r * width + c]);
                    temporal.1.push(v[(r + 1) * width + c]);
                }
            }
        }
        let bound = |n: usize| 4.0 / (n as f64).sqrt();
        assert!(correlation(&spatial.0, &spatial.1).abs() < bound(spatial.0.len()));
        assert!(correlation(&temporal.0, &temporal.1).abs() < bound(temporal.0.len()));
    }

    #[test]
    fn replica_streams_are_uncorrelated() {
        let a = draws(&NoiseStream::new(5, 0), 200_000, 1000);
        let b = draws(&NoiseStream::new(5, 1), 200_000, 1000);
        assert!(correlation(&a, &b).abs() < 4.0 / (a.len() as f64).sqrt());
        let c = draws(&NoiseStream::new(6, 0), 200_000, 1000);
        assert!(correlation(&a, &c).abs() < 4.0 / (a.len() as f64).sqrt());
    }

    #[test]
    fn scaled_noise_check_passes_for_white_noise() {
        let g = grid();
        for seed in [1, 2] {
            let report = scaled_noise_check(&NoiseStream::new(seed, 0), &g, 1_000_000).unwrap();
            assert!(report.pass, "{report:?}");
        }
        let a = scaled_noise_check(&NoiseStream::new(1, 0), &g, 1_000_000).unwrap();
        let b = scaled_noise_check(&NoiseStream::new(2, 0), &g, 1_000_000).unwrap();
        assert_ne!(a.halved_variance, b.halved_variance);
    }

    #[test]
    fn scaled_noise_check_rejects_constant_field() {
        let constant = vec![3.0; 10_000];
        let report = scaled_noise_check_values(&constant, 100, 0.001, 0.05).unwrap();
        assert!(!report.pass);
        assert!(scaled_noise_check(&NoiseStream::new(1, 0), &grid(), 100).is_err());
    }
}
