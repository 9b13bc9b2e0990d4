//! Kernel density of log U(2, 0), its sup under bandwidth halving, and the
//! upper-tail shape.
//!
//! cargo run --release --example density -- [replicas]

use pamlab::config::{Config, Experiment};
use pamlab::estimator::density::density_boundedness;
use pamlab::harness::run_partial;

fn main() -> pamlab::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(50_000);
    let mut cfg = Config::preset(Experiment::Density);
    cfg.replicas = n;
    let x = run_partial(&cfg, 0, None)?.samples.column_at(0.0)?;
    let rep = density_boundedness(&x, None, 30)?;
    println!(
        "bandwidth {:.4}: sup {:.4} at {:+.3}; half bandwidth sup {:.4} (change {:.3})",
        rep.bandwidth, rep.sup, rep.argsup, rep.sup_half, rep.stability
    );
    match rep.tail {
        Some(t) => println!(
            "-log P(X > y) ~ {:.3} + {:.4} y^{:.3} on y in [{:.2}, {:.2}]",
            -t.log_prefactor,
            t.coefficient,
            t.exponent,
            t.thresholds[0],
            t.thresholds[t.thresholds.len() - 1]
        ),
        None => println!("too few replicas for a tail fit"),
    }
    Ok(())
}
