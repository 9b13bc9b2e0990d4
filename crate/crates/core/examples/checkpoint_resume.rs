//! Partial runs keyed by configuration hash: resume, merge, and the
//! mismatch guard.
//!
//! cargo run --release --example checkpoint_resume

use pamlab::config::{Config, Experiment};
use pamlab::harness::{checkpoint_merge, config_hash, run_partial};

fn main() -> pamlab::Result<()> {
    let mut cfg = Config::preset(Experiment::Simulate);
    cfg.points = vec![0.0, 1.0];
    cfg.replicas = 200;
    let first = run_partial(&cfg, 0, None)?;
    println!("hash {} after {} replicas", &config_hash(&cfg)?[..16], first.samples.len());

    cfg.replicas = 400;
    let resumed = run_partial(&cfg, 0, Some(&first))?;
    let fresh = run_partial(&cfg, 0, None)?;
    println!("resumed to {} replicas, equal to a fresh run: {}", resumed.samples.len(), resumed == fresh);

    let mut other = cfg.clone();
    other.seed += 1;
    let foreign = run_partial(&other, 0, None)?;
    match checkpoint_merge(&first, &foreign) {
        Err(e) => println!("merge with another seed refused: {e}"),
        Ok(_) => println!("unexpected merge"),
    }
    Ok(())
}
