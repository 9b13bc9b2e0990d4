//! Spatial maximum of log U over growing windows, normalized by
//! (log R)^{2/3}.
//!
//! cargo run --release --example spatial_max -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::maxscan::MaxScan;
use pamlab::harness::run_partial;

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(100);
    let mut cfg = Config::preset(Experiment::Maxscan);
    cfg.replicas = n;
    let s = run_partial(&cfg, 0, None)?.samples;
    let scan = MaxScan::from_profiles(cfg.t, s.labels(), s.rows().map(<[f64]>::to_vec).collect())?;
    println!("   R   median M   q10    median  q90");
    for k in 0..scan.radii.len() {
        println!(
            "{:4} {:9.4} {:7.4} {:7.4} {:7.4}",
            scan.radii[k], scan.median_max[k], scan.ratio_q10[k], scan.ratio_median[k], scan.ratio_q90[k]
        );
    }
    println!("asymptotic bracket [{:.4}, {:.4}]", scan.lower_const, scan.upper_const);
    Ok(())
}
