//! Fits the decay rate of `||u(t)||_p` over the last decade of a box run and
//! compares it with `-(1/q)(1 - 1/p)`.
//!
//! `cargo run --release --example decay_fit`

use nwave::diagnostics::decay_fit;
use nwave::experiments::{domain_for, log_times};
use nwave::profiles::make_initial_datum;
use nwave::solver::{run, GridSpec};
use nwave::{InitialDatum, SimParams};

fn main() -> nwave::Result<()> {
    let q = 1.75;
    let datum = InitialDatum::standard_box();
    let grid = domain_for(&datum, q, 30.0, 1.0 / 128.0, 20.0, 10.0)?;
    let times = log_times(1.0, 30.0, 6);
    let params = SimParams {
        q,
        grid: GridSpec { x_min: grid.x_min(), x_max: grid.x_max(), dx: grid.dx() },
        t_final: 30.0,
        output_times: times,
        ..SimParams::default()
    };
    let traj = run(&make_initial_datum(&datum, &grid)?, &params)?;
    for p in [1.0, 2.0, f64::INFINITY] {
        let r = decay_fit(&traj, p, 0.1)?;
        println!("p = {p}: slope {:.4}, target {:.4} ({})", r.get("slope").unwrap(), r.get("target").unwrap(), r.verdict);
    }
    Ok(())
}
