//! Tail coefficient: calibration on exact stretched-exponential draws, then
//! a ray-frame ensemble at x = 0.
//!
//! cargo run --release --example tail_fit -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::tail::{default_theta_grid, stretched_exponential_samples, tail_fit, TailOptions};
use pamlab::harness::run_partial;
use pamlab::kernel::theory_constants;

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(100_000);
    let theta = default_theta_grid();

    let synthetic = stretched_exponential_samples(1_000_000, 3);
    let calib = tail_fit(&synthetic, &theta, &TailOptions::default())?;
    println!("synthetic: c = {:.4} [{:.4}, {:.4}] (exact 1)", calib.coefficient, calib.ci_low, calib.ci_high);

    let mut cfg = Config::preset(Experiment::Tail);
    cfg.replicas = n;
    let partial = run_partial(&cfg, 0, None)?;
    let opts = TailOptions {
        min_replicas: 0,
        ..TailOptions::default()
    };
    let fit = tail_fit(&partial.samples.column_at(0.0)?, &theta, &opts)?;
    println!("theta  count  log P");
    for k in (0..theta.len()).filter(|&k| fit.usable[k]) {
        println!("{:5.2} {:6} {:+.4}", theta[k], fit.counts[k], fit.survival[k].ln());
    }
    let target = theory_constants(cfg.t)?.tail_coefficient;
    println!(
        "PAM t={}: c = {:.4} [{:.4}, {:.4}], asymptotic {:.4}",
        cfg.t, fit.coefficient, fit.ci_low, fit.ci_high, target
    );
    Ok(())
}
