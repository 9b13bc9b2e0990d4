//! Small field ensemble through the harness: mean one, stationarity and
//! second moments across points.
//!
//! cargo run --release --example mean_one -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::harness::{evaluate, run_partial};

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(2_000);
    let mut cfg = Config::preset(Experiment::Simulate);
    cfg.replicas = n;
    cfg.simulate.mean_one_replicas = n / 2;
    cfg.points = vec![0.0, 1.0, 2.0, 4.0];
    let partial = run_partial(&cfg, 0, None)?;
    let rep = evaluate(&cfg, &partial)?;
    for t in rep.tables.iter().filter(|t| t.name != "samples") {
        print!("{}:\n{}", t.name, t.to_csv());
    }
    for c in &rep.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
