//! File formats: snapshot CSV `(t, x, u)`, summary CSV
//! `(sweep_value, metric, value)`, report files and a compact binary dump.
//!
//! Binary layout, little endian:
//!
//! ```text
//! magic    8 bytes  b"NWAVEGF\0"
//! version  u32      1
//! n        u64      cell count
//! dx       f64
//! x_min    f64
//! values   n * f64
//! ```
//!
//! Every writer goes through [`write_atomic`].

use std::io::{Read, Write};
use std::path::Path;

use crate::diagnostics::Report;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::solver::{Snapshot, Trajectory};

pub const MAGIC: &[u8; 8] = b"NWAVEGF\0";
pub const VERSION: u32 = 1;

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn encode_binary(u: &GridFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * u.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(u.len() as u64).to_le_bytes());
    out.extend_from_slice(&u.dx().to_le_bytes());
    out.extend_from_slice(&u.grid().x_min().to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<GridFunction> {
    let bad = |m: &str| Error::Format(format!("binary dump: {m}"));
    if bytes.len() < 36 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let word = |at: usize| -> [u8; 8] { bytes[at..at + 8].try_into().unwrap() };
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(word(12)) as usize;
    let dx = f64::from_le_bytes(word(20));
    let x_min = f64::from_le_bytes(word(28));
    if bytes.len() != 36 + 8 * n {
        return Err(bad(&format!("expected {} bytes, found {}", 36 + 8 * n, bytes.len())));
    }
    let values = (0..n).map(|j| f64::from_le_bytes(word(36 + 8 * j))).collect();
    GridFunction::from_values(Grid::with_cells(x_min, dx, n)?, values)
}

pub fn write_binary(path: &Path, u: &GridFunction) -> Result<()> {
    write_atomic(path, &encode_binary(u))
}

pub fn read_binary(path: &Path) -> Result<GridFunction> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_binary(&bytes)
}

/// Snapshot rows `t,x,u`; floats use the shortest round-trip representation.
pub fn snapshots_csv(snapshots: &[Snapshot]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "u"])?;
    for s in snapshots {
        let g = s.u.grid();
        for (j, v) in s.u.values().iter().enumerate() {
            w.write_record([s.t.to_string(), g.x(j).to_string(), v.to_string()])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Parses snapshot rows written by [`snapshots_csv`] on `grid`.
pub fn parse_snapshots_csv(data: &[u8], grid: &Grid) -> Result<Vec<Snapshot>> {
    let mut r = csv::Reader::from_reader(data);
    let mut out: Vec<Snapshot> = Vec::new();
    let mut current: Option<(f64, Vec<f64>)> = None;
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("{s:?}: {e}")));
    let flush = |c: Option<(f64, Vec<f64>)>, out: &mut Vec<Snapshot>| -> Result<()> {
        if let Some((t, v)) = c {
            out.push(Snapshot { t, u: GridFunction::from_values(*grid, v)? });
        }
        Ok(())
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Format(format!("expected 3 columns, found {}", rec.len())));
        }
        let (t, x, u) = (parse(&rec[0])?, parse(&rec[1])?, parse(&rec[2])?);
        if current.as_ref().is_some_and(|(tc, v)| *tc != t || v.len() == grid.len()) {
            flush(current.take(), &mut out)?;
        }
        let (_, v) = current.get_or_insert_with(|| (t, Vec::with_capacity(grid.len())));
        if v.len() >= grid.len() || x != grid.x(v.len()) {
            return Err(Error::GridMismatch(format!("row x = {x} does not match the grid")));
        }
        v.push(u);
    }
    flush(current, &mut out)?;
    Ok(out)
}

/// Rows `t,mass,leaked`.
pub fn mass_history_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "mass", "leaked"])?;
    for (&(t, m), &(_, l)) in traj.mass_history.iter().zip(&traj.leak_history) {
        w.write_record([t.to_string(), m.to_string(), l.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Rows `t,l2_squared,dissipation`.
pub fn energy_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "l2_squared", "dissipation"])?;
    for e in &traj.energy_history {
        w.write_record([e.t.to_string(), e.l2_squared.to_string(), e.dissipation.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// One row of a study summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub metric: String,
    pub value: f64,
}

impl SummaryRow {
    pub fn new(sweep_value: f64, metric: impl Into<String>, value: f64) -> SummaryRow {
        SummaryRow { sweep_value, metric: metric.into(), value }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sweep_value", "metric", "value"])?;
    for r in rows {
        w.write_record([r.sweep_value.to_string(), r.metric.clone(), r.value.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn reports_csv(reports: &[Report]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["report", "label", "value", "verdict", "tolerance"])?;
    for r in reports {
        for row in r.csv_rows() {
            w.write_record(&row)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Verdict file: an overall `verdict=pass|fail` line followed by the reports.
pub fn verdict_text(reports: &[Report]) -> String {
    let pass = crate::diagnostics::all_pass(reports);
    let mut s = format!("verdict={}\n", if pass { "pass" } else { "fail" });
    for r in reports {
        s.push_str(&r.to_text());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> GridFunction {
        let g = Grid::with_cells(-1.0, 0.1, 30).unwrap();
        GridFunction::from_fn(g, |x| (3.0 * x).sin() / 7.0 + 1e-300)
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let u = field();
        let back = decode_binary(&encode_binary(&u)).unwrap();
        assert_eq!(back, u);
        let mut bytes = encode_binary(&u);
        bytes[0] = b'X';
        assert!(decode_binary(&bytes).is_err());
        let bytes = encode_binary(&u);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let u = field();
        let snaps = vec![Snapshot { t: 0.1, u: u.clone() }, Snapshot { t: 1.0 / 3.0, u: u.map(|v| -v) }];
        let data = snapshots_csv(&snaps).unwrap();
        let back = parse_snapshots_csv(&data, u.grid()).unwrap();
        assert_eq!(back, snaps);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
