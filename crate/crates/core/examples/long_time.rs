//! Scaled distance to the N-wave along a short long-time study of the signed two-box datum.
//!
//! `cargo run --release --example long_time`

use nwave::experiments::{run_study, Settings, StudyKind, StudySpec};

fn main() -> nwave::Result<()> {
    let mut spec = StudySpec::new(StudyKind::LongTimeSignChanging, Settings { dx: 1.0 / 128.0, ..Settings::default() });
    spec.sweep = vec![1.0, 3.0, 10.0, 30.0];
    let out = run_study(&spec)?;
    for row in &out.summary {
        println!("t = {:>4}  {:<14} {:.5}", row.sweep_value, row.metric, row.value);
    }
    println!("{}", if out.passed() { "pass" } else { "fail" });
    Ok(())
}
