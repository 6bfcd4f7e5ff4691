//! Evolves the unit box and prints mass, sup norm and the explicit sup bound.
//!
//! `cargo run --release --example simulate_box`

use nwave::diagnostics::sup_bound;
use nwave::profiles::make_initial_datum;
use nwave::solver::{run, GridSpec};
use nwave::{InitialDatum, SimParams};

fn main() -> nwave::Result<()> {
    let params = SimParams {
        grid: GridSpec { x_min: -10.0, x_max: 20.0, dx: 1.0 / 128.0 },
        t_final: 8.0,
        output_times: vec![0.5, 1.0, 2.0, 4.0, 8.0],
        ..SimParams::default()
    };
    let grid = params.grid.build()?;
    let phi = make_initial_datum(&InitialDatum::standard_box(), &grid)?;
    let traj = run(&phi, &params)?;
    println!("{} steps", traj.steps);
    println!("{:>5} {:>18} {:>10} {:>10}", "t", "mass", "sup", "bound");
    for s in &traj.snapshots {
        println!("{:>5} {:>18.15} {:>10.6} {:>10.6}", s.t, s.u.mass(), s.u.max_abs(), sup_bound(params.q, 1.0, s.t));
    }
    println!("leaked through the boundary: {:.3e}", traj.tail_budget());
    Ok(())
}
