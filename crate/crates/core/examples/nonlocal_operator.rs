//! Applies `J*u - u` to a smooth bump and compares `lambda^2 (J_lambda*psi - psi)`
//! with `(m2/2) psi_xx` as `lambda` grows.
//!
//! `cargo run --release --example nonlocal_operator`

use nwave::kernel::{Kernel, KernelFamily};
use nwave::nonlocal::{apply_l, second_order_bound_ratio, Norm};
use nwave::{Grid, GridFunction};

fn main() -> nwave::Result<()> {
    let g = Grid::new(-6.0, 6.0, 1.0 / 256.0)?;
    let k = Kernel::new(KernelFamily::Uniform, 1.0, g.dx())?;
    let psi = GridFunction::from_fn(g, |x| (-x * x).exp());
    let lu = apply_l(&k, &psi, 1.0)?;
    println!("mass of (J*psi - psi) = {:.3e}", lu.mass());
    println!("m2/2 = {:.10}", k.m2() / 2.0);
    for lambda in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let r = second_order_bound_ratio(&k, &psi, lambda, Norm::Inf)?;
        println!("lambda = {lambda:>4}: ratio = {r:.10}");
    }
    Ok(())
}
