//! Builds a configuration from TOML text plus overrides, runs it and writes the outputs.
//!
//! `cargo run --release --example config_run -- [OUT_DIR]`

use std::path::PathBuf;

use nwave::cli::cmd_simulate;
use nwave::config::Config;

const TOML: &str = r#"
q = 1.25
t_final = 2.0
[grid]
x_min = -8.0
x_max = 12.0
dx = 0.0078125
[datum]
kind = "gaussian"
mass = 1.5
sigma = 0.3
[output]
times = [0.5, 1.0, 2.0]
"#;

fn main() -> nwave::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("nwave-config-run"));
    let config = Config::from_sources(Some(("inline.toml", TOML)), &["mu=0.01".to_string()])?;
    cmd_simulate(&config, &out)?;
    println!("outputs in {}", out.display());
    match Config::from_sources(Some(("inline.toml", TOML)), &["q=2.5".to_string()]) {
        Err(e) => println!("rejected override: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
