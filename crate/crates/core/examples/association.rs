//! Positive dependence: CDF gap on a quantile grid and covariances of
//! monotone functionals.
//!
//! cargo run --release --example association -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::gap::{association_library, association_test, cdf_gap_test, quantile_levels};
use pamlab::harness::run_partial;

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(4_000);
    let mut cfg = Config::preset(Experiment::Gap);
    cfg.replicas = n;
    let s = run_partial(&cfg, 0, None)?.samples;

    let gap = cdf_gap_test(&s.column_at(0.0)?, &s.column_at(4.0)?, &quantile_levels(20))?;
    println!(
        "gap(0, 4): max {:.5}, min z {:.2}, violations {}, cov {:.5}",
        gap.max_gap, gap.min_z, gap.violations, gap.covariance.covariance
    );
    if let Some(r) = gap.ratio {
        println!("max gap / cov^(1/3) = {r:.4}");
    }
    for (h1, h2) in association_library(s.labels())? {
        let r = association_test(&s, &h1, &h2)?;
        println!("{:>24} {:>24}  {:+.5} ± {:.5}", r.h1, r.h2, r.estimate.covariance, r.estimate.standard_error);
    }
    Ok(())
}
