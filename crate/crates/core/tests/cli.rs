//! Exit-code contract and output files of the `nwave` binary.

use std::path::Path;
use std::process::{Command, Output};

fn nwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nwave"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("NWAVE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "t_final = 0.5\n[output]\ntimes = [0.25, 0.5]\n[grid]\nx_min = -5.0\nx_max = 8.0\ndx = 0.015625\n").unwrap();
    let o = nwave(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["snapshots.csv", "mass_history.csv", "energy.csv", "final.bin", "manifest.toml"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let snaps = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert!(snaps.starts_with("t,x,u\n"));
    assert_eq!(snaps.lines().count(), 1 + 2 * 832);
    let fin = nwave::io::read_binary(&dir.path().join("final.bin")).unwrap();
    let history = std::fs::read_to_string(dir.path().join("mass_history.csv")).unwrap();
    let last: Vec<f64> = history.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 0.5);
    assert_eq!(last[1], fin.mass());
    assert!((fin.mass() - 1.0).abs() <= last[2] + 1e-14);
}

#[test]
fn q_outside_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "# exponent\nq = 2.5\n").unwrap();
    let o = nwave(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("bad.toml:2") && e.contains("1 < q <= 2"), "{e}");
}

#[test]
fn time_step_collapse_aborts_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["simulate", "--set", "cfl=0.999", "--set", "datum.kind=\"box\"", "--set", "datum.height=1e40"]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("t = 0") && e.contains("cell"), "{e}");
}

#[test]
fn tail_budget_abort_is_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["simulate", "--set", "grid.x_min=-1", "--set", "grid.x_max=2", "--set", "t_final=2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("widen"), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["verify", "nonlocal_comparison"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let verdict = std::fs::read_to_string(dir.path().join("verdict.txt")).unwrap();
    assert!(verdict.starts_with("verdict=pass\n"));
    assert!(dir.path().join("reports.csv").exists() && dir.path().join("manifest.toml").exists());

    let o = nwave(dir.path(), &["verify", "oleinik", "--set", "datum.kind=\"two_boxes_signed\""]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("nonnegative"));

    let o = nwave(dir.path(), &["verify", "olenik"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_failure_exits_1() {
    // three points up to t = 4 are far short of the required reduction
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["verify", "kernel_bound", "--set", "kernel.family=\"triangle\""]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = nwave(dir.path(), &["study", "long_time_nonnegative", "--set", "study.sweep=[1, 2, 4]", "--set", "grid.dx=0.015625"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let verdict = std::fs::read_to_string(dir.path().join("verdict.txt")).unwrap();
    assert!(verdict.starts_with("verdict=fail\n"));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("sweep_value,metric,value\n"));
}

#[test]
fn study_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["study", "vanishing_viscsity"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nwave(dir.path(), &["study", "vanishing_viscosity", "--set", "study.sweep=[0.05, 0.1]"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nwave(dir.path(), &["study", "rescaling_family", "--set", "grid.dx=0.0078125", "--set", "study.sweep=[1, 2]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("snapshots").read_dir().unwrap().count() >= 2);
}

#[test]
fn dumps() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwave(dir.path(), &["dump-kernel", "--set", "lambda=2", "--set", "kernel.family=\"triangle\""]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    assert!(k.starts_with("x,J\n"));
    let mass: f64 = k.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum::<f64>() / 256.0;
    assert!((mass - 1.0).abs() < 1e-12);

    let o = nwave(dir.path(), &["dump-nwave", "--set", "datum.kind=\"box\"", "--set", "datum.height=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let w = std::fs::read_to_string(dir.path().join("nwave.csv")).unwrap();
    let mass: f64 = w.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum::<f64>() / 256.0;
    assert!((mass - 2.0).abs() < 1e-10);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nwave(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(nwave(dir.path(), &["simulate", "--set", "nonsense"]).status.code(), Some(2));
    assert_eq!(nwave(dir.path(), &["simulate", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_nwave")).args(["dump-kernel", "--out"]).arg(dir.path()).env("NWAVE_THREADS", "zero").output().unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}
