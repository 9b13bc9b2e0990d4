//! Probability that log U stays below (β log R)^{2/3} on the sparse
//! blocking points, for growing R.
//!
//! cargo run --release --example blocking -- [replicas] [beta]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::blocking::blocking_scan;
use pamlab::harness::run_partial;

fn main() -> pamlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(500);
    let beta: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(0.1);
    let mut cfg = Config::preset(Experiment::Blocking);
    cfg.replicas = n;
    let s = run_partial(&cfg, 0, None)?.samples;
    let rep = blocking_scan(&s, cfg.t, &cfg.blocking.radii, cfg.blocking.a, beta)?;
    for r in &rep.rows {
        println!(
            "R={:<4} points {:?} level {:.4}: P = {:.4} ± {:.4}",
            r.r, r.points, r.level, r.probability, r.standard_error
        );
    }
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
