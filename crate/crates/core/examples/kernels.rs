//! Samples each kernel family, rescales it and prints the moments.
//!
//! `cargo run --example kernels`

use nwave::kernel::{Kernel, KernelFamily};

fn main() -> nwave::Result<()> {
    let dx = 1.0 / 128.0;
    for family in [KernelFamily::Uniform, KernelFamily::Triangle, KernelFamily::TruncatedGaussian] {
        let k = Kernel::new(family, 1.0, dx)?;
        println!("{:<18} cells={:<4} m0={:.15} m2={:.12}", family.to_string(), k.samples().len(), k.m0(), k.m2());
        for lambda in [2.0, 4.0, 8.0] {
            let r = k.rescale(lambda)?;
            println!("  lambda={lambda:<3} cells={:<4} m2*lambda^2={:.12}", r.samples().len(), r.m2() * lambda * lambda);
        }
    }
    Ok(())
}
