//! Run configuration: a TOML file read as a flat key space plus `key=value`
//! overrides. Tables are flattened, so `[grid]` with `dx = 0.01` and a
//! top-level `grid.dx = 0.01` are the same key.
//!
//! ```toml
//! q = 1.5
//! t_final = 2.0
//! [grid]
//! x_min = -10.0
//! x_max = 20.0
//! dx = 0.00390625
//! [datum]
//! kind = "box"
//! ```
//!
//! Every value is checked when the file is read; errors name `path:line`
//! (or the offending `--set`).

use std::collections::BTreeMap;
use std::path::Path;

use toml::Value;

use crate::error::{Error, Result};
use crate::experiments::{Settings, Tolerances};
use crate::kernel::KernelFamily;
use crate::profiles::InitialDatum;
use crate::solver::{GridSpec, KernelSpec, SimParams};

/// Every key the configuration understands.
pub const KEYS: &[&str] = &[
    "q",
    "lambda",
    "mu",
    "alpha",
    "cfl",
    "t_final",
    "tail_cap",
    "seed",
    "grid.x_min",
    "grid.x_max",
    "grid.dx",
    "kernel.family",
    "kernel.width",
    "output.times",
    "datum.kind",
    "datum.height",
    "datum.left",
    "datum.right",
    "datum.mass",
    "datum.center",
    "datum.sigma",
    "datum.pos_height",
    "datum.pos_left",
    "datum.pos_right",
    "datum.neg_height",
    "datum.neg_left",
    "datum.neg_right",
    "datum.half_width",
    "tol.scheme",
    "tol.quad",
    "tol.slope",
    "tol.energy",
    "tol.comparison",
    "tol.sup",
    "study.sweep",
];

#[derive(Debug, Clone)]
struct Entry {
    value: Value,
    location: String,
}

/// Parsed, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Parameters for `simulate`.
    pub sim: SimParams,
    /// Parameters for `verify` and `study`.
    pub settings: Settings,
    /// `None` when the file leaves the datum to the command.
    pub datum: Option<InitialDatum>,
    pub sweep: Option<Vec<f64>>,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_sources(None, &[]).expect("defaults are valid")
    }
}

impl Config {
    /// Reads `path` (if any) and applies `overrides` (`key=value`) on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let text = match path {
            Some(p) => Some((
                p.display().to_string(),
                std::fs::read_to_string(p).map_err(|e| Error::Config {
                    location: p.display().to_string(),
                    message: e.to_string(),
                })?,
            )),
            None => None,
        };
        Config::from_sources(text.as_ref().map(|(n, t)| (n.as_str(), t.as_str())), overrides)
    }

    /// As [`Config::load`] with the file contents given directly as `(name, text)`.
    pub fn from_sources(file: Option<(&str, &str)>, overrides: &[String]) -> Result<Config> {
        let mut entries = BTreeMap::new();
        if let Some((name, text)) = file {
            let table: toml::Table =
                text.parse().map_err(|e: toml::de::Error| Error::Config { location: name.into(), message: e.message().into() })?;
            let lines = key_lines(text);
            let mut flat = Vec::new();
            flatten("", &table, &mut flat);
            for (key, value) in flat {
                let location = match lines.get(&key) {
                    Some(l) => format!("{name}:{l}"),
                    None => name.to_string(),
                };
                entries.insert(key, Entry { value, location });
            }
        }
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config {
                location: format!("--set {o}"),
                message: "expected key=value".into(),
            })?;
            let key = key.trim();
            entries.insert(key.to_string(), Entry { value: parse_override(raw.trim()), location: format!("--set {key}") });
        }
        for (key, e) in &entries {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config { location: e.location.clone(), message: format!("unknown key `{key}`") });
            }
        }
        build(&entries, file.map(|f| f.0).unwrap_or("defaults"))
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

/// Line number of each flattened key, tracking `[section]` headers.
fn key_lines(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('[') {
            section = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim().trim_matches('"');
        if k.is_empty() || k.starts_with('#') {
            continue;
        }
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        out.entry(key).or_insert(i + 1);
    }
    out
}

fn parse_override(raw: &str) -> Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, Entry>,
}

impl Reader<'_> {
    fn err(&self, key: &str, message: String) -> Error {
        let location = self.entries.get(key).map(|e| e.location.clone()).unwrap_or_else(|| key.to_string());
        Error::Config { location, message }
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key).map(|e| &e.value) {
            None => Ok(default),
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(v) => Err(self.err(key, format!("`{key}` must be a number, got {v}"))),
        }
    }

    /// A number satisfying `ok`, described by `what` in the error.
    fn checked(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, what: &str) -> Result<f64> {
        let v = self.f64(key, default)?;
        if ok(v) {
            Ok(v)
        } else {
            Err(self.err(key, format!("`{key}` = {v} violates {what}")))
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        self.checked(key, default, |v| v > 0.0 && v.is_finite(), "0 < value < inf")
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        let Value::Array(items) = &e.value else {
            return Err(self.err(key, format!("`{key}` must be an array of numbers")));
        };
        items
            .iter()
            .map(|v| match v {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(self.err(key, format!("`{key}` must be an array of numbers, found {v}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn string(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("`{key}` must be a string, got {v}"))),
        }
    }
}

fn datum(r: &Reader<'_>) -> Result<Option<InitialDatum>> {
    let fields: Vec<&str> = KEYS.iter().copied().filter(|k| k.starts_with("datum.") && *k != "datum.kind").collect();
    let Some(kind) = r.string("datum.kind")? else {
        if let Some(k) = fields.iter().find(|k| r.has(k)) {
            return Err(r.err(k, format!("`{k}` given without `datum.kind`")));
        }
        return Ok(None);
    };
    let (allowed, d): (&[&str], InitialDatum) = match kind {
        "box" => (
            &["height", "left", "right"],
            InitialDatum::Box {
                height: r.f64("datum.height", 1.0)?,
                left: r.f64("datum.left", 0.0)?,
                right: r.f64("datum.right", 1.0)?,
            },
        ),
        "gaussian" => (
            &["mass", "center", "sigma"],
            InitialDatum::Gaussian {
                mass: r.f64("datum.mass", 1.0)?,
                center: r.f64("datum.center", 0.0)?,
                sigma: r.positive("datum.sigma", 0.5)?,
            },
        ),
        "two_boxes_signed" => (
            &["pos_height", "pos_left", "pos_right", "neg_height", "neg_left", "neg_right"],
            InitialDatum::TwoBoxesSigned {
                pos_height: r.f64("datum.pos_height", 2.0)?,
                pos_left: r.f64("datum.pos_left", 0.0)?,
                pos_right: r.f64("datum.pos_right", 1.0)?,
                neg_height: r.f64("datum.neg_height", -1.0)?,
                neg_left: r.f64("datum.neg_left", -2.0)?,
                neg_right: r.f64("datum.neg_right", -1.0)?,
            },
        ),
        "dipole_zero_mass" => (
            &["height", "half_width"],
            InitialDatum::DipoleZeroMass {
                height: r.f64("datum.height", 1.0)?,
                half_width: r.positive("datum.half_width", 1.0)?,
            },
        ),
        other => {
            return Err(r.err(
                "datum.kind",
                format!("unknown datum kind {other:?}; expected box, gaussian, two_boxes_signed or dipole_zero_mass"),
            ))
        }
    };
    for k in &fields {
        if r.has(k) && !allowed.contains(&&k["datum.".len()..]) {
            return Err(r.err(k, format!("`{k}` does not apply to datum kind {kind:?}")));
        }
    }
    Ok(Some(d))
}

fn build(entries: &BTreeMap<String, Entry>, file: &str) -> Result<Config> {
    let r = Reader { entries };
    let defaults = SimParams::default();
    let q = r.checked("q", defaults.q, |q| q > 1.0 && q <= 2.0, "1 < q <= 2")?;
    let lambda = r.positive("lambda", defaults.lambda)?;
    let mu = r.checked("mu", defaults.mu, |v| v >= 0.0 && v.is_finite(), "mu >= 0")?;
    let alpha = r.checked("alpha", defaults.alpha, |v| v >= 0.0 && v.is_finite(), "alpha >= 0")?;
    let cfl = r.checked("cfl", defaults.cfl, |v| v > 0.0 && v < 1.0, "0 < cfl < 1")?;
    let t_final = r.positive("t_final", defaults.t_final)?;
    let tail_cap = r.positive("tail_cap", defaults.tail_cap)?;
    let seed = match entries.get("seed").map(|e| &e.value) {
        None => Settings::default().seed,
        Some(Value::Integer(v)) if *v >= 0 => *v as u64,
        Some(v) => return Err(r.err("seed", format!("`seed` must be a nonnegative integer, got {v}"))),
    };
    let grid = GridSpec {
        x_min: r.f64("grid.x_min", defaults.grid.x_min)?,
        x_max: r.f64("grid.x_max", defaults.grid.x_max)?,
        dx: r.positive("grid.dx", defaults.grid.dx)?,
    };
    if !(grid.x_max > grid.x_min) {
        return Err(r.err("grid.x_max", format!("`grid.x_max` = {} must exceed `grid.x_min` = {}", grid.x_max, grid.x_min)));
    }
    let family = match r.string("kernel.family")? {
        None => defaults.kernel.family,
        Some(s) => s.parse::<KernelFamily>().map_err(|e| r.err("kernel.family", e.to_string()))?,
    };
    let kernel = KernelSpec { family, width: r.positive("kernel.width", defaults.kernel.width)? };
    let output_times = r.list("output.times")?.unwrap_or_else(|| vec![t_final]);
    let td = Tolerances::default();
    let tol = Tolerances {
        scheme: r.checked("tol.scheme", td.scheme, |v| v >= 0.0, "tolerance >= 0")?,
        quad: r.checked("tol.quad", td.quad, |v| v >= 0.0, "tolerance >= 0")?,
        slope: r.checked("tol.slope", td.slope, |v| v >= 0.0, "tolerance >= 0")?,
        energy: r.checked("tol.energy", td.energy, |v| v >= 0.0, "tolerance >= 0")?,
        comparison: r.checked("tol.comparison", td.comparison, |v| v >= 0.0, "tolerance >= 0")?,
        sup: r.checked("tol.sup", td.sup, |v| v >= 0.0, "tolerance >= 0")?,
    };
    let datum = datum(&r)?;
    let sweep = r.list("study.sweep")?;

    let sim = SimParams { q, lambda, mu, alpha, kernel, grid, t_final, cfl, output_times, tail_cap };
    sim.validate().map_err(|e| {
        let key = if e.to_string().contains("output time") { "output.times" } else { "grid.dx" };
        Error::Config { location: entries.get(key).map(|e| e.location.clone()).unwrap_or_else(|| file.to_string()), message: e.to_string() }
    })?;
    let settings = Settings {
        q,
        alpha,
        cfl,
        dx: grid.dx,
        kernel,
        datum: datum.clone().unwrap_or_else(InitialDatum::standard_box),
        t_final,
        tail_cap,
        tol,
        seed,
    };
    Ok(Config { sim, settings, datum, sweep })
}
