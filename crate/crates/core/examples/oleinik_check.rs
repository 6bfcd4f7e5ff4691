//! Measures `t max (u^(q-1))_x` on the interior of a box run.
//!
//! `cargo run --release --example oleinik_check`

use nwave::diagnostics::{interior_window, oleinik_margin};
use nwave::profiles::make_initial_datum;
use nwave::solver::{run, GridSpec};
use nwave::{InitialDatum, SimParams};

fn main() -> nwave::Result<()> {
    let params = SimParams {
        grid: GridSpec { x_min: -10.0, x_max: 15.0, dx: 1.0 / 256.0 },
        t_final: 8.0,
        output_times: vec![1.0, 2.0, 4.0, 8.0],
        ..SimParams::default()
    };
    let phi = make_initial_datum(&InitialDatum::standard_box(), &params.grid.build()?)?;
    let traj = run(&phi, &params)?;
    for s in &traj.snapshots {
        let inner = interior_window(&s.u, &params, 1.0)?;
        let r = oleinik_margin(&inner, params.q, s.t, 0.05)?;
        println!("t = {}: m*t = {:.4} ({})", s.t, r.get("m_t").unwrap(), r.verdict);
    }
    Ok(())
}
