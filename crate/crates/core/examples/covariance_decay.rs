//! Covariance of log U between 0 and x, against the first-order chaos curve.
//!
//! cargo run --release --example covariance_decay -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::covariance::{covariance_decay, log_covariance};
use pamlab::harness::run_partial;

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(4_000);
    let mut cfg = Config::preset(Experiment::Cov);
    cfg.replicas = n;
    cfg.points = vec![0.0, 1.0, 2.0, 4.0, 8.0];
    let partial = run_partial(&cfg, 0, None)?;
    let xs = [1.0, 2.0, 4.0, 8.0];
    let est = xs
        .iter()
        .map(|&x| Ok((x, log_covariance(&partial.samples, 0.0, x)?)))
        .collect::<pamlab::Result<Vec<_>>>()?;
    let rep = covariance_decay(cfg.t, &est, 4.0)?;
    let chaos = (cfg.t / (4.0 * std::f64::consts::PI)).sqrt();
    println!("    x       cov        se   |cov|*x   first-order");
    for r in &rep.rows {
        println!(
            "{:5} {:9.5} {:9.5} {:9.5} {:13.5}",
            r.x,
            r.covariance,
            r.standard_error,
            r.product,
            chaos * r.integral_bound
        );
    }
    println!("non-increasing within 2 SE: {}, max ratio to first {:.3}", rep.non_increasing, rep.max_ratio_to_first);
    Ok(())
}
