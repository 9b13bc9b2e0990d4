//! Noise-off u-frame run from the point mass compared with the heat kernel.
//!
//! cargo run --release --example heat_oracle

use pamlab::kernel::{heat_kernel, relative_error};
use pamlab::noise::GridSpec;
use pamlab::solver::DirectSolver;

fn main() -> pamlab::Result<()> {
    for dx in [0.04, 0.02, 0.01] {
        let grid = GridSpec::new(dx, 0.5 * dx * dx, 9.0, 1.0)?;
        let (field, _) = DirectSolver::new(&grid)?.run(None)?;
        let worst = field
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| grid.x(*i).abs() <= 3.0)
            .map(|(i, &u)| relative_error(u, heat_kernel(1.0, grid.x(i)).unwrap()))
            .fold(0.0, f64::max);
        println!("dx={dx:<5} steps={:<6} mass={:.8} max rel err on |x|<=3: {worst:.3e}", grid.n_steps(), field.mass());
    }
    Ok(())
}
