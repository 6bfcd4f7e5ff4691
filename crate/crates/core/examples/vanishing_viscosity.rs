//! L1 distance between viscous and inviscid runs as the viscosity shrinks.
//!
//! `cargo run --release --example vanishing_viscosity`

use nwave::experiments::{run_study, Settings, StudyKind, StudySpec};

fn main() -> nwave::Result<()> {
    let mut spec = StudySpec::new(StudyKind::VanishingViscosity, Settings { t_final: 0.5, ..Settings::default() });
    spec.sweep = vec![0.4, 0.1];
    let out = run_study(&spec)?;
    for row in &out.summary {
        println!("mu = {:<5} {:<22} {:.5}", row.sweep_value, row.metric, row.value);
    }
    for r in &out.reports {
        println!("{}: {}", r.name, r.verdict);
    }
    Ok(())
}
