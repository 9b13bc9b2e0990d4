//! The ray-frame ladder: level layout, cost, and one window of U(t, ·).
//!
//! cargo run --release --example ray_window

use pamlab::noise::NoiseStream;
use pamlab::solver::{RayGrid, RaySolver};

fn main() -> pamlab::Result<()> {
    let grid = RayGrid::new(0.05, 2.0, 0.0, 4.0)?;
    let solver = RaySolver::new(&grid)?;
    println!("{:>9} {:>7} {:>6} {:>12} {:>12}", "spacing", "cells", "steps", "s_start", "s_end");
    for l in solver.levels() {
        println!("{:>9.4} {:>7} {:>6} {:>12.4e} {:>12.4e}", l.spacing, l.cells, l.steps, l.s_start, l.s_end);
    }
    println!("cost {} cell-steps per replica", solver.cost());

    let u = solver.run(Some(&NoiseStream::new(11, 0)))?;
    for x in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        println!("log U(2, {x:+}) = {:+.4}", u.log_at(x)?);
    }
    let det = solver.run(None)?;
    println!("noise off: U in [{}, {}]", det.values.iter().copied().fold(f64::INFINITY, f64::min), det.values.iter().copied().fold(0.0, f64::max));
    Ok(())
}
