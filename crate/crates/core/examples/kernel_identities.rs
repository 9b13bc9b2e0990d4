//! Heat-kernel identities on random inputs and the closed-form constants.
//!
//! cargo run --example kernel_identities

use pamlab::kernel;

fn main() -> pamlab::Result<()> {
    let rep = kernel::identity_suite(10_000, 1);
    println!("bridge identity   max rel err {:.3e}", rep.ratio_max_rel_err);
    println!("product identity  max rel err {:.3e}", rep.product_max_rel_err);
    println!("scaling identity  max rel err {:.3e}", rep.scaling_max_rel_err);

    let (lhs, rhs) = kernel::kernel_ratio_identity(0.7, 2.0, 0.4, -1.1)?;
    println!("one evaluation: {lhs:.15} vs {rhs:.15}");

    for t in [1.0, 2.0, 4.0] {
        let c = kernel::theory_constants(t)?;
        println!(
            "t={t}: tail {:.4}  max bracket [{:.4}, {:.4}]  beta_max {:.4}  I(t,4) = {:.6}",
            c.tail_coefficient,
            c.lower_const,
            c.upper_const,
            c.blocking_beta_max,
            kernel::covariance_integral_bound(t, 4.0)?
        );
    }
    Ok(())
}
