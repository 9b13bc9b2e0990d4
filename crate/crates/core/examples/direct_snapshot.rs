//! One noisy u-frame replica; writes `x,u,U,logU` to a CSV snapshot.
//!
//! cargo run --release --example direct_snapshot -- [out.csv]

use pamlab::noise::{GridSpec, NoiseStream};
use pamlab::solver::{write_snapshot_csv, DirectSolver};

fn main() -> pamlab::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "snapshot.csv".into());
    let grid = GridSpec::new(0.05, 1e-3, 12.0, 2.0)?;
    let (field, ratio) = DirectSolver::new(&grid)?.run(Some(&NoiseStream::new(7, 0)))?;
    write_snapshot_csv(path.as_ref(), &field, &ratio)?;
    println!("mass {:.4} at t = {}", field.mass(), field.time);
    for x in [-2.0, 0.0, 2.0] {
        println!("U(2, {x:+}) = {:.4}", ratio.value_at(x)?);
    }
    println!("wrote {path}");
    Ok(())
}
