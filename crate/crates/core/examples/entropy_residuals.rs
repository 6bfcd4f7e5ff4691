//! Kruzkov residuals of the closed-form N-wave against bump test functions.
//!
//! `cargo run --release --example entropy_residuals`

use nwave::diagnostics::{entropy_residuals, nwave_trajectory, EntropyTestCase};
use nwave::{Grid, NWave};

fn main() -> nwave::Result<()> {
    let nw = NWave::new(1.0, 1.5)?;
    let g = Grid::new(-2.0, 4.0, 1.0 / 256.0)?;
    let times: Vec<f64> = (0..=200).map(|k| 0.5 + 0.01 * k as f64).collect();
    let traj = nwave_trajectory(&nw, &g, &times)?;
    let mut cases = Vec::new();
    for k in [-1.0, 0.0, 0.5, 1.0] {
        for x_center in [0.0, 0.8, 1.6] {
            cases.push(EntropyTestCase { k, t_center: 1.5, t_radius: 0.5, x_center, x_radius: 0.6 });
        }
    }
    for r in entropy_residuals(&traj, &cases, 1e-3)? {
        println!("{:<40} residual = {:>12.4e} {}", r.name, r.get("residual").unwrap(), r.verdict);
    }
    Ok(())
}
