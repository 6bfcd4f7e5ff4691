//! The N-wave of mass 1 for q = 3/2: front, sup, cell-averaged mass and a few values.
//!
//! `cargo run --example nwave_profile`

use nwave::{Grid, NWave};

fn main() -> nwave::Result<()> {
    let nw = NWave::new(1.0, 1.5)?;
    let g = Grid::new(-1.0, 7.0, 1.0 / 512.0)?;
    for t in [1.0, 2.0, 8.0] {
        let w = nw.sample(t, &g)?;
        println!("t = {t}: front = {:.12}, sup = {:.12}, discrete mass = {:.15}", nw.front(t), nw.sup(t), w.mass());
    }
    for x in [0.0, 0.5, 1.0, 1.44] {
        println!("w(1, {x}) = {:.12}", nw.eval(1.0, x)?);
    }
    let neg = NWave::new(-1.0, 1.5)?;
    println!("negative mass: w(1, 1) = {:.12}", neg.eval(1.0, 1.0)?);
    Ok(())
}
