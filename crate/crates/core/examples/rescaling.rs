//! Compares `lambda u(lambda^q t, lambda x)` computed from one run with a direct
//! run of the rescaled system.
//!
//! `cargo run --release --example rescaling`

use nwave::experiments::{run_study, Settings, StudyKind, StudySpec};

fn main() -> nwave::Result<()> {
    let mut spec = StudySpec::new(StudyKind::RescalingFamily, Settings { dx: 1.0 / 128.0, ..Settings::default() });
    spec.sweep = vec![1.0, 2.0, 4.0];
    let out = run_study(&spec)?;
    for row in &out.summary {
        println!("lambda = {}  {:<18} {:.4e}", row.sweep_value, row.metric, row.value);
    }
    Ok(())
}
