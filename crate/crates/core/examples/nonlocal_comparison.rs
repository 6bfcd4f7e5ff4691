//! Random instances of the pointwise comparison inequality at the maximiser of `w`.
//!
//! `cargo run --example nonlocal_comparison`

use nwave::diagnostics::check_nonlocal_comparison;
use nwave::experiments::{grid_covering, random_comparison_case};
use nwave::kernel::{Kernel, KernelFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nwave::Result<()> {
    let g = grid_covering(-4.0, 4.0, 1.0 / 32.0)?;
    let k = Kernel::new(KernelFamily::Uniform, 1.0, g.dx())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for beta in [0.0, 0.5, 1.0, 2.0] {
        let case = random_comparison_case(&k, &g, beta, &mut rng)?;
        let r = check_nonlocal_comparison(&k, &case, 1e-10)?;
        println!(
            "beta = {beta}: x0 = {:.3}, A_z = {:.3e}, lhs = {:.4e}, A_z w(x0) = {:.4e} ({})",
            g.x(case.x0),
            r.get("A_z(x0)").unwrap(),
            r.get("lhs").unwrap(),
            r.get("rhs").unwrap(),
            r.verdict
        );
    }
    Ok(())
}
