//! Replica ensembles: parallel execution with results in replica order,
//! abort accounting, checkpoints keyed by a configuration hash, and the
//! per-experiment reports and output files.

mod output;
mod report;

pub use output::{write_outputs, OutputFiles, RunManifest, Table};
pub use report::{evaluate, Check, Report};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::config::{Config, Observable};
use crate::error::{Error, Result};
use crate::estimator::{maxscan, SampleSet};
use crate::noise::NoiseStream;
use crate::solver::{RatioField, RaySolver};

/// Largest fraction of replicas allowed to abort before a run fails.
pub const ABORT_BUDGET: f64 = 1e-3;

/// Bumped whenever per-replica output changes for a fixed configuration.
const SAMPLER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abort {
    pub replica: u64,
    pub reason: String,
}

/// Observations gathered so far for one configuration hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partial {
    pub config_hash: String,
    pub observable: Observable,
    pub samples: SampleSet,
    pub aborted: Vec<Abort>,
}

impl Partial {
    pub fn replicas_seen(&self) -> usize {
        self.samples.len() + self.aborted.len()
    }

    /// Restricted to replica ids below `n`.
    pub fn truncate(&self, n: u64) -> Partial {
        Partial {
            config_hash: self.config_hash.clone(),
            observable: self.observable.clone(),
            samples: self.samples.filter_replicas(|r| r < n),
            aborted: self.aborted.iter().filter(|a| a.replica < n).cloned().collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Partial> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Hash of everything that determines a replica's observations. Replica
/// count, threads, output paths and test thresholds are excluded.
pub fn config_hash(cfg: &Config) -> Result<String> {
    let (center, half) = cfg.window()?;
    let key = serde_json::json!({
        "sampler": SAMPLER_VERSION,
        "t": cfg.t,
        "seed": cfg.seed,
        "grid": cfg.ray_grid(center, half)?,
        "observable": cfg.observable()?,
    });
    Ok(hex::encode(Sha256::digest(key.to_string().as_bytes())))
}

/// Union of two partial runs of the same configuration.
pub fn checkpoint_merge(a: &Partial, b: &Partial) -> Result<Partial> {
    if a.config_hash != b.config_hash {
        return Err(Error::Contract(format!(
            "config hash {} does not match {}",
            a.config_hash, b.config_hash
        )));
    }
    if a.observable != b.observable {
        return Err(Error::Contract("partials record different observables".into()));
    }
    let samples = a.samples.merge(&b.samples)?;
    let mut aborted: Vec<Abort> = a.aborted.iter().chain(&b.aborted).cloned().collect();
    aborted.sort_by_key(|x| x.replica);
    if let Some(w) = aborted.windows(2).find(|w| w[0].replica == w[1].replica) {
        return Err(Error::Contract(format!("replica {} aborted in both partials", w[0].replica)));
    }
    if let Some(x) = aborted.iter().find(|x| samples.replicas().binary_search(&x.replica).is_ok()) {
        return Err(Error::Contract(format!("replica {} both aborted and observed", x.replica)));
    }
    Ok(Partial {
        config_hash: a.config_hash.clone(),
        observable: a.observable.clone(),
        samples,
        aborted,
    })
}

/// Runs `f` on every id and returns the results in id order, whatever the
/// thread count. `threads = 0` uses rayon's default.
pub fn run_replicas<T, F>(ids: &[u64], threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| ids.par_iter().map(|&id| f(id)).collect()))
}

fn observe(ratio: &RatioField, observable: &Observable) -> Result<Vec<f64>> {
    match observable {
        Observable::Points(p) => p.iter().map(|&x| ratio.log_at(x)).collect(),
        Observable::MaxProfile(r) => maxscan::max_profile(ratio, r),
    }
}

/// Simulates replicas `0..cfg.replicas` not already in `resume` and merges.
pub fn run_partial(cfg: &Config, threads: usize, resume: Option<&Partial>) -> Result<Partial> {
    let hash = config_hash(cfg)?;
    if let Some(p) = resume {
        if p.config_hash != hash {
            return Err(Error::Contract(format!(
                "checkpoint hash {} does not match configuration hash {hash}",
                p.config_hash
            )));
        }
    }
    let observable = cfg.observable()?;
    let (center, half) = cfg.window()?;
    let solver = RaySolver::new(&cfg.ray_grid(center, half)?)?;
    let done = |id: u64| {
        resume.is_some_and(|p| {
            p.samples.replicas().binary_search(&id).is_ok() || p.aborted.iter().any(|a| a.replica == id)
        })
    };
    let ids: Vec<u64> = (0..cfg.replicas).filter(|&id| !done(id)).collect();
    log::info!(
        "{}: {} replicas to simulate, {} cell-steps each",
        cfg.experiment.name(),
        ids.len(),
        solver.cost()
    );
    let results = run_replicas(&ids, threads, |id| {
        let noise = NoiseStream::new(cfg.seed, id);
        solver.run(Some(&noise)).and_then(|ratio| observe(&ratio, &observable))
    })?;
    let labels = match &observable {
        Observable::Points(p) => p.clone(),
        Observable::MaxProfile(r) => r.clone(),
    };
    let mut samples = SampleSet::new(labels)?;
    let mut aborted = Vec::new();
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(row) => samples.push(*id, &row)?,
            Err(e @ Error::Numeric(_)) => aborted.push(Abort {
                replica: *id,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let fresh = Partial {
        config_hash: hash,
        observable,
        samples,
        aborted,
    };
    match resume {
        Some(p) => checkpoint_merge(&p.truncate(cfg.replicas), &fresh),
        None => Ok(fresh),
    }
}

/// Fails when more than [`ABORT_BUDGET`] of the replicas aborted.
pub fn check_abort_budget(partial: &Partial) -> Result<()> {
    let total = partial.replicas_seen();
    let aborted = partial.aborted.len();
    if aborted as f64 > ABORT_BUDGET * total as f64 {
        return Err(Error::Numeric(format!(
            "{aborted} of {total} replicas aborted, above the {} budget",
            ABORT_BUDGET
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    fn small(e: Experiment, n: u64) -> Config {
        let mut c = Config::preset(e);
        c.replicas = n;
        c.grid.spacing = 0.25;
        c.grid.resolution = 0.5;
        c.grid.margin = 3.0;
        c.points = vec![-1.0, 0.0, 1.0];
        c
    }

    #[test]
    fn results_follow_id_order_for_any_thread_count() {
        let ids: Vec<u64> = (0..200).rev().collect();
        let a = run_replicas(&ids, 1, |i| i * 3).unwrap();
        let b = run_replicas(&ids, 4, |i| i * 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 597);
    }

    #[test]
    fn resumed_run_equals_fresh_run() {
        let mut c = small(Experiment::Simulate, 6);
        let first = run_partial(&c, 2, None).unwrap();
        c.replicas = 12;
        let resumed = run_partial(&c, 1, Some(&first)).unwrap();
        let fresh = run_partial(&c, 3, None).unwrap();
        assert_eq!(resumed, fresh);
        assert_eq!(fresh.samples.len(), 12);
    }

    #[test]
    fn hash_ignores_counts_and_detects_changes() {
        let a = small(Experiment::Simulate, 6);
        let mut b = a.clone();
        b.replicas = 99;
        b.out = "elsewhere".into();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.seed += 1;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        let pa = run_partial(&a, 1, None).unwrap();
        assert!(matches!(run_partial(&b, 1, Some(&pa)), Err(Error::Contract(_))));
        let pb = run_partial(&b, 1, None).unwrap();
        assert!(matches!(checkpoint_merge(&pa, &pb), Err(Error::Contract(_))));
    }

    #[test]
    fn abort_budget() {
        let c = small(Experiment::Simulate, 4);
        let mut p = run_partial(&c, 1, None).unwrap();
        check_abort_budget(&p).unwrap();
        p.aborted.push(Abort {
            replica: 100,
            reason: "test".into(),
        });
        assert!(matches!(check_abort_budget(&p), Err(Error::Numeric(_))));
    }
}
