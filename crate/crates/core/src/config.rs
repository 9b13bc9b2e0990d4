//! Run configuration: per-experiment presets, TOML files layered on top, and
//! `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{blocking, tail};
use crate::solver::RayGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Simulate,
    Tail,
    Cov,
    Gap,
    Density,
    Maxscan,
    Blocking,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::Tail,
        Experiment::Cov,
        Experiment::Gap,
        Experiment::Density,
        Experiment::Maxscan,
        Experiment::Blocking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Tail => "tail",
            Experiment::Cov => "cov",
            Experiment::Gap => "gap",
            Experiment::Density => "density",
            Experiment::Maxscan => "maxscan",
            Experiment::Blocking => "blocking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub spacing: f64,
    pub resolution: f64,
    pub margin: f64,
    pub step_guard: f64,
    pub start_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            resolution: RayGrid::DEFAULT_RESOLUTION,
            margin: RayGrid::DEFAULT_MARGIN,
            step_guard: RayGrid::DEFAULT_STEP_GUARD,
            start_fraction: RayGrid::DEFAULT_START_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Replicas used for the mean-one check; the KS check compares
    /// `x = 0` on replicas `[0, m)` against each other point on `[m, 2m)`.
    pub mean_one_replicas: u64,
    pub mean_one_z: f64,
    pub ks_alpha: f64,
    pub moment_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub theta: Vec<f64>,
    pub min_count: usize,
    pub min_replicas: usize,
    pub bootstrap: usize,
    /// Allowed relative deviation of the coefficient from `(4/3)√(2/t)`.
    pub tolerance: f64,
    pub calibration_replicas: usize,
    pub calibration_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovConfig {
    pub x: Vec<f64>,
    pub bound_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub x: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// `0` selects the Silverman bandwidth.
    pub bandwidth: f64,
    /// Replicas entering the estimate (the first ones by id); `0` means all.
    pub replicas: u64,
    pub stability: f64,
    pub exponent_low: f64,
    pub exponent_high: f64,
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxscanConfig {
    pub radii: Vec<f64>,
    pub envelope_low: f64,
    pub envelope_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockingConfig {
    pub radii: Vec<f64>,
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    pub t: f64,
    pub seed: u64,
    pub replicas: u64,
    pub out: PathBuf,
    /// Checks that decide the exit status; empty enables all of them.
    pub enabled: Vec<String>,
    pub grid: GridConfig,
    /// Observation points of the field experiments.
    pub points: Vec<f64>,
    pub simulate: SimulateConfig,
    pub tail: TailConfig,
    pub cov: CovConfig,
    pub gap: GapConfig,
    pub density: DensityConfig,
    pub maxscan: MaxscanConfig,
    pub blocking: BlockingConfig,
}

/// What each replica contributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `log U(t, x)` at the points.
    Points(Vec<f64>),
    /// `M(R)` at the radii.
    MaxProfile(Vec<f64>),
}

impl Config {
    /// Defaults that reproduce the acceptance experiment for `experiment`.
    pub fn preset(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            t: 2.0,
            seed: 20_240_601,
            replicas: 20_000,
            out: PathBuf::from("out").join(experiment.name()),
            enabled: Vec::new(),
            grid: GridConfig::default(),
            points: vec![-8.0, -4.0, -2.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0],
            simulate: SimulateConfig {
                mean_one_replicas: 10_000,
                mean_one_z: 3.0,
                ks_alpha: 1e-3,
                moment_z: 4.0,
            },
            tail: TailConfig {
                theta: tail::default_theta_grid(),
                min_count: 30,
                min_replicas: 100_000,
                bootstrap: 200,
                tolerance: 0.25,
                calibration_replicas: 1_000_000,
                calibration_tolerance: 0.05,
            },
            cov: CovConfig {
                x: vec![2.0, 4.0, 8.0, 16.0],
                bound_factor: 4.0,
            },
            gap: GapConfig { x: 4.0, levels: 20 },
            density: DensityConfig {
                bandwidth: 0.0,
                replicas: 100_000,
                stability: 0.1,
                exponent_low: 1.2,
                exponent_high: 1.8,
                min_count: 30,
            },
            maxscan: MaxscanConfig {
                radii: vec![8.0, 16.0, 32.0, 64.0],
                envelope_low: 0.15,
                envelope_high: 1.0,
            },
            blocking: BlockingConfig {
                radii: vec![16.0, 32.0, 64.0, 128.0],
                a: 0.15,
                beta: 0.1,
            },
        };
        match experiment {
            Experiment::Tail => {
                // Cheap grid: the x = 0 marginal is insensitive to the spacing.
                c.replicas = 1_000_000;
                c.grid.spacing = 0.1;
                c.grid.resolution = 0.5;
                c.grid.margin = 4.0;
            }
            Experiment::Density => {
                c.replicas = 100_000;
                c.grid.spacing = 0.1;
                c.grid.resolution = 0.5;
                c.grid.margin = 4.0;
            }
            Experiment::Maxscan => c.replicas = 1_000,
            Experiment::Blocking => c.replicas = 4_000,
            _ => {}
        }
        c
    }

    /// Preset, then the TOML file, then `key=value` overrides.
    pub fn load(experiment: Experiment, file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = toml::Value::try_from(Self::preset(experiment))
            .map_err(|e| Error::Config(format!("preset does not serialize: {e}")))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let layer: toml::Value = text
                .parse::<toml::Table>()
                .map(toml::Value::Table)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            if let Some(exp) = layer.get("experiment") {
                if exp.as_str() != Some(experiment.name()) {
                    return Err(Error::Config(format!(
                        "config file is for experiment {exp}, not {}",
                        experiment.name()
                    )));
                }
            }
            merge(&mut value, layer);
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Config = value
            .try_into()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ray_grid(&self, center: f64, half_width: f64) -> Result<RayGrid> {
        let g = RayGrid {
            spacing: self.grid.spacing,
            horizon: self.t,
            center,
            half_width,
            resolution: self.grid.resolution,
            margin: self.grid.margin,
            step_guard: self.grid.step_guard,
            start_fraction: self.grid.start_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    /// Observation points needed by the experiment.
    pub fn observable(&self) -> Result<Observable> {
        Ok(match self.experiment {
            Experiment::Simulate | Experiment::Cov | Experiment::Gap => Observable::Points(self.points.clone()),
            Experiment::Tail | Experiment::Density => Observable::Points(vec![0.0]),
            Experiment::Maxscan => Observable::MaxProfile(self.maxscan.radii.clone()),
            Experiment::Blocking => {
                let mut pts: Vec<f64> = Vec::new();
                for &r in &self.blocking.radii {
                    for x in blocking::blocking_points(r, self.blocking.a)? {
                        if !pts.contains(&x) {
                            pts.push(x);
                        }
                    }
                }
                pts.sort_by(f64::total_cmp);
                Observable::Points(pts)
            }
        })
    }

    /// Simulated window `(center, half_width)` covering the observable.
    pub fn window(&self) -> Result<(f64, f64)> {
        let h = self.grid.spacing;
        match self.observable()? {
            Observable::Points(p) => {
                let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let center = ((lo + hi) / 2.0 / h).round() * h;
                let half = ((hi - center).max(center - lo) / h).ceil() * h;
                Ok((center, half))
            }
            Observable::MaxProfile(r) => Ok((0.0, r.iter().copied().fold(0.0, f64::max))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t must be > 0, got {}", self.t));
        }
        if self.replicas == 0 {
            return bad("replicas must be > 0".into());
        }
        let (center, half) = self.window()?;
        let grid = self.ray_grid(center, half)?;
        let on_grid = |x: f64| ((x - center) / grid.spacing - ((x - center) / grid.spacing).round()).abs() < 1e-6;
        match self.observable()? {
            Observable::Points(p) => {
                if p.is_empty() {
                    return bad("no observation points".into());
                }
                if let Some(x) = p.iter().find(|&&x| !on_grid(x)) {
                    return bad(format!("point {x} is not a multiple of spacing {} from the window center", grid.spacing));
                }
            }
            Observable::MaxProfile(r) => {
                if r.iter().any(|&x| !(x > 1.0)) || r.windows(2).any(|w| w[0] >= w[1]) {
                    return bad(format!("maxscan radii must be increasing and > 1, got {r:?}"));
                }
            }
        }
        match self.experiment {
            Experiment::Cov | Experiment::Gap => {
                if !self.points.contains(&0.0) {
                    return bad("points must include 0".into());
                }
                let xs: Vec<f64> = if self.experiment == Experiment::Cov {
                    self.cov.x.clone()
                } else {
                    vec![self.gap.x]
                };
                if let Some(x) = xs.iter().find(|x| !self.points.contains(x)) {
                    return bad(format!("x = {x} is not among the points {:?}", self.points));
                }
                if self.gap.levels < 2 {
                    return bad("gap.levels must be >= 2".into());
                }
            }
            Experiment::Simulate => {
                if !self.points.contains(&0.0) {
                    return bad("points must include 0".into());
                }
            }
            Experiment::Tail => {
                if self.tail.theta.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("tail.theta must be strictly increasing".into());
                }
            }
            Experiment::Density => {
                if self.density.bandwidth < 0.0 {
                    return bad(format!("density.bandwidth must be >= 0, got {}", self.density.bandwidth));
                }
            }
            Experiment::Blocking => {
                if self.blocking.radii.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("blocking.radii must be increasing".into());
                }
            }
            Experiment::Maxscan => {}
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Value, layer: toml::Value) {
    match (base, layer) {
        (toml::Value::Table(b), toml::Value::Table(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, l) => *b = l,
    }
}

/// Applies `section.key=value`, with the value parsed as TOML (bare words
/// become strings).
pub fn apply_override(value: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut slot = value;
    for (i, k) in keys.iter().enumerate() {
        let table = slot
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{path}: {k} is not inside a section")))?;
        if !table.contains_key(*k) {
            return Err(Error::Config(format!("unknown configuration key {path}")));
        }
        if i + 1 == keys.len() {
            let old = &table[*k];
            let new = match (old, parsed.clone()) {
                (toml::Value::Float(_), toml::Value::Integer(n)) => toml::Value::Float(n as f64),
                (toml::Value::Array(_), toml::Value::Array(a)) => toml::Value::Array(
                    a.into_iter()
                        .map(|v| match v {
                            toml::Value::Integer(n) => toml::Value::Float(n as f64),
                            v => v,
                        })
                        .collect(),
                ),
                (_, v) => v,
            };
            table.insert(k.to_string(), new);
            return Ok(());
        }
        slot = table.get_mut(*k).expect("checked above");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for e in Experiment::ALL {
            let c = Config::preset(e);
            c.validate().unwrap();
            let back: Config = toml::from_str(&c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn overrides_and_files_layer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 5\n[blocking]\nbeta = 0.05\n").unwrap();
        let c = Config::load(
            Experiment::Blocking,
            Some(&path),
            &["t=1".into(), "blocking.radii=[16, 32]".into()],
        )
        .unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.t, 1.0);
        assert_eq!(c.blocking.beta, 0.05);
        assert_eq!(c.blocking.radii, vec![16.0, 32.0]);
        assert_eq!(c.blocking.a, 0.15);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        for o in ["grid.step_guard=2", "t=-1", "nonsense=1", "grid.spacing=0", "blocking.a=0.3"] {
            let e = Config::load(Experiment::Blocking, None, &[o.to_string()]);
            assert!(matches!(e, Err(Error::Config(_)) | Err(Error::Domain(_))), "{o}");
        }
        let e = Config::load(Experiment::Simulate, None, &["points=[0.0, 0.013]".into()]);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn windows_cover_observables() {
        let c = Config::preset(Experiment::Blocking);
        assert_eq!(c.observable().unwrap(), Observable::Points(vec![32.0, 64.0, 128.0, 256.0]));
        assert_eq!(c.window().unwrap(), (144.0, 112.0));
        let c = Config::preset(Experiment::Simulate);
        assert_eq!(c.window().unwrap(), (4.0, 12.0));
    }
}
