//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or configuration
//! error, 3 numerical abort.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiments::{self, Outcome, Settings, StudyKind, StudySpec, Suite};
use crate::io;
use crate::profiles::{make_initial_datum, InitialDatum, NWave};
use crate::solver::{run, SimParams};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nwave", version, about = "Convection with nonlocal diffusion: simulation and estimate checks")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "nwave-out")]
    pub out: PathBuf,
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write snapshots, mass and energy histories.
    Simulate,
    /// Run a verification suite.
    Verify { suite: String },
    /// Run a study.
    Study { study: String },
    /// Write the rescaled kernel samples as `x,J`.
    DumpKernel,
    /// Write the N-wave of the configured datum's mass at `t_final` as `x,w`.
    DumpNwave,
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    target: &'a str,
    crate_version: &'a str,
    parameters: &'a T,
}

fn manifest<T: Serialize>(command: &str, target: &str, parameters: &T) -> Result<String> {
    let m = Manifest { command, target, crate_version: env!("CARGO_PKG_VERSION"), parameters };
    toml::to_string(&m).map_err(|e| Error::Format(e.to_string()))
}

fn load(cli: &Cli) -> Result<Config> {
    let mut config = Config::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        config.settings.seed = seed;
    }
    Ok(config)
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    if let Ok(n) = std::env::var("NWAVE_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                // a pool can only be installed once per process; later calls keep the first
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: NWAVE_THREADS must be a positive integer, got {n:?}");
                return EXIT_USAGE;
            }
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate => cmd_simulate(&load(cli)?, &cli.out),
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            cmd_verify(&load(cli)?, suite, &cli.out)
        }
        Command::Study { study } => {
            let kind: StudyKind = study.parse()?;
            cmd_study(&load(cli)?, kind, &cli.out)
        }
        Command::DumpKernel => cmd_dump_kernel(&load(cli)?, &cli.out),
        Command::DumpNwave => cmd_dump_nwave(&load(cli)?, &cli.out),
    }
}

/// Writes `snapshots.csv`, `mass_history.csv`, `energy.csv`, `final.bin` and `manifest.toml`.
pub fn cmd_simulate(config: &Config, out: &Path) -> Result<i32> {
    let p: &SimParams = &config.sim;
    let grid = p.grid.build()?;
    let datum = config.datum.clone().unwrap_or_else(InitialDatum::standard_box);
    let phi = make_initial_datum(&datum, &grid)?;
    let traj = run(&phi, p)?;
    io::write_atomic(&out.join("snapshots.csv"), &io::snapshots_csv(&traj.snapshots)?)?;
    io::write_atomic(&out.join("mass_history.csv"), &io::mass_history_csv(&traj)?)?;
    io::write_atomic(&out.join("energy.csv"), &io::energy_csv(&traj)?)?;
    if let Some(last) = traj.snapshots.last() {
        io::write_binary(&out.join("final.bin"), &last.u)?;
    }
    #[derive(Serialize)]
    struct Run<'a> {
        sim: &'a SimParams,
        datum: &'a InitialDatum,
    }
    io::write_atomic(&out.join("manifest.toml"), manifest("simulate", datum.name(), &Run { sim: p, datum: &datum })?.as_bytes())?;
    println!(
        "simulated {} to t={} in {} steps; mass {:.12} -> {:.12}, leaked {:.3e}",
        datum.name(),
        p.t_final,
        traj.steps,
        traj.initial_mass(),
        traj.snapshots.last().map(|s| s.u.mass()).unwrap_or(traj.initial_mass()),
        traj.tail_budget(),
    );
    Ok(EXIT_PASS)
}

fn finish(outcome: &Outcome, out: &Path, manifest: String) -> Result<i32> {
    experiments::write_outcome(outcome, out, &manifest)?;
    for r in &outcome.reports {
        if !r.passed() {
            eprintln!("{}", r.to_text());
        }
    }
    let pass = outcome.passed();
    println!("{}: {}", outcome.name, if pass { "pass" } else { "fail" });
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_verify(config: &Config, suite: Suite, out: &Path) -> Result<i32> {
    let outcome = experiments::run_suite(suite, &config.settings)?;
    finish(&outcome, out, manifest("verify", suite.name(), &config.settings)?)
}

pub fn cmd_study(config: &Config, kind: StudyKind, out: &Path) -> Result<i32> {
    let mut spec = StudySpec::new(kind, config.settings.clone());
    if let Some(d) = &config.datum {
        spec.settings.datum = d.clone();
    }
    if let Some(sweep) = &config.sweep {
        spec.sweep = sweep.clone();
    }
    #[derive(Serialize)]
    struct Study<'a> {
        settings: &'a Settings,
        sweep: &'a [f64],
    }
    let m = manifest("study", kind.name(), &Study { settings: &spec.settings, sweep: &spec.sweep })?;
    let outcome = experiments::run_study(&spec)?;
    finish(&outcome, out, m)
}

pub fn cmd_dump_kernel(config: &Config, out: &Path) -> Result<i32> {
    let kernel = config.sim.rescaled_kernel()?;
    let mut buf = Vec::new();
    kernel.write_csv(&mut buf)?;
    io::write_atomic(&out.join("kernel.csv"), &buf)?;
    println!("kernel {} width {} lambda {}: m0 = {:.15}, m2 = {:.15}", kernel.family(), config.sim.kernel.width, config.sim.lambda, kernel.m0(), kernel.m2());
    Ok(EXIT_PASS)
}

pub fn cmd_dump_nwave(config: &Config, out: &Path) -> Result<i32> {
    let mass = config.datum.as_ref().map(|d| d.mass()).unwrap_or(1.0);
    let nw = NWave::new(mass, config.sim.q)?;
    let grid = config.sim.grid.build()?;
    let t = config.sim.t_final;
    let w = nw.sample(t, &grid)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["x", "w"])?;
    for (j, v) in w.values().iter().enumerate() {
        wtr.write_record([grid.x(j).to_string(), v.to_string()])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    io::write_atomic(&out.join("nwave.csv"), &bytes)?;
    println!("N-wave M={mass} q={} at t={t}: front {:.12}, sup {:.12}", nw.q, nw.front(t), nw.sup(t));
    Ok(EXIT_PASS)
}
