//! Verification suites and end-to-end studies.
//!
//! Suites ([`Suite`]) check one family of estimates on a fixed standard
//! setup; studies ([`StudyKind`]) sweep a parameter and emit summary curves.
//! Both return an [`Outcome`]: reports, summary rows and the trajectories
//! they produced, which [`write_outcome`] stores on disk.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    self, check_nonlocal_comparison, contraction_check, decay_fit, energy_check, entropy_residuals, initial_trace,
    interior_window, l1_modulus, mass_check, nwave_distance, nwave_trajectory, oleinik_margin, sup_bound_check,
    tail_bound_check, ComparisonCase, EntropyTestCase, Report,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::io::{self, SummaryRow};
use crate::kernel::Kernel;
use crate::nonlocal::{second_order_bound_ratio, Norm};
use crate::profiles::{make_initial_datum, InitialDatum, NWave};
use crate::solver::{rescale_trajectory, run, run_ensemble, GridSpec, KernelSpec, SimParams, Trajectory};

/// Per-suite tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed excess of `t max (u^(q-1))_x` over 1.
    pub scheme: f64,
    /// Allowed negative Kruzkov residual, and the bound on its change under refinement.
    pub quad: f64,
    /// Allowed deviation of a fitted decay slope.
    pub slope: f64,
    pub energy: f64,
    pub comparison: f64,
    pub sup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { scheme: 0.05, quad: 1e-3, slope: 0.1, energy: 1e-10, comparison: 1e-10, sup: 1e-10 }
    }
}

/// Knobs shared by all suites and studies. Domains are derived from the
/// datum and the final time, so only the spacing is configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub q: f64,
    pub alpha: f64,
    pub cfl: f64,
    pub dx: f64,
    pub kernel: KernelSpec,
    pub datum: InitialDatum,
    pub t_final: f64,
    pub tail_cap: f64,
    pub tol: Tolerances,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            q: 1.5,
            alpha: 1.0,
            cfl: 0.9,
            dx: 1.0 / 256.0,
            kernel: KernelSpec::default(),
            datum: InitialDatum::standard_box(),
            t_final: 1.0,
            tail_cap: 1e-3,
            tol: Tolerances::default(),
            seed: 20_240_601,
        }
    }
}

impl Settings {
    /// Parameters for a `lambda = 1`, inviscid run on `grid` with snapshots at `times`.
    pub fn params(&self, grid: &Grid, times: &[f64]) -> SimParams {
        SimParams {
            q: self.q,
            lambda: 1.0,
            mu: 0.0,
            alpha: self.alpha,
            kernel: self.kernel,
            grid: GridSpec { x_min: grid.x_min(), x_max: grid.x_max(), dx: grid.dx() },
            t_final: times.last().copied().unwrap_or(self.t_final),
            cfl: self.cfl,
            output_times: times.to_vec(),
            tail_cap: self.tail_cap,
        }
    }
}

/// Grid of spacing `dx` from `lo` covering at least up to `hi`.
pub fn grid_covering(lo: f64, hi: f64, dx: f64) -> Result<Grid> {
    let n = ((hi - lo) / dx - 1e-9).ceil().max(1.0) as usize;
    Grid::with_cells(lo, dx, n)
}

/// Domain for evolving `datum` up to `t_final`: `left` units before the
/// support and `right` units beyond the furthest N-wave front the data can reach.
pub fn domain_for(datum: &InitialDatum, q: f64, t_final: f64, dx: f64, left: f64, right: f64) -> Result<Grid> {
    let (a, b) = datum.support();
    let reach = NWave::new(datum.l1().max(f64::MIN_POSITIVE), q)?.front(t_final);
    grid_covering(a.floor() - left, (b.max(0.0) + reach).ceil() + right, dx)
}

/// `per_decade` logarithmically spaced times from `t0` to `t1`, both included.
pub fn log_times(t0: f64, t1: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t1 / t0).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|k| if k == n { t1 } else { t0 * 10f64.powf(decades * k as f64 / n as f64) }).collect()
}

/// Result of a suite or study.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub name: String,
    pub reports: Vec<Report>,
    pub summary: Vec<SummaryRow>,
    pub runs: Vec<(String, Trajectory)>,
}

impl Outcome {
    fn new(name: &str) -> Outcome {
        Outcome { name: name.to_string(), ..Outcome::default() }
    }

    pub fn passed(&self) -> bool {
        diagnostics::all_pass(&self.reports)
    }

    pub fn report(&self, prefix: &str) -> Option<&Report> {
        self.reports.iter().find(|r| r.name.starts_with(prefix))
    }

    /// Books a run together with its energy and mass reports.
    fn record(&mut self, label: String, traj: Trajectory, tol: &Tolerances) {
        let mut e = energy_check(&traj, tol.energy);
        e.name = format!("energy {label}");
        let mut m = mass_check(&traj);
        m.name = format!("mass {label}");
        self.reports.push(e);
        self.reports.push(m);
        self.runs.push((label, traj));
    }
}

/// Writes `manifest.toml`, `summary.csv`, `reports.csv`, `verdict.txt` and one
/// `snapshots/<run>.csv` per trajectory into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path, manifest: &str) -> Result<()> {
    io::write_atomic(&dir.join("manifest.toml"), manifest.as_bytes())?;
    io::write_atomic(&dir.join("summary.csv"), &io::summary_csv(&outcome.summary)?)?;
    io::write_atomic(&dir.join("reports.csv"), &io::reports_csv(&outcome.reports)?)?;
    io::write_atomic(&dir.join("verdict.txt"), io::verdict_text(&outcome.reports).as_bytes())?;
    for (label, traj) in &outcome.runs {
        let name: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
        io::write_atomic(&dir.join("snapshots").join(format!("{name}.csv")), &io::snapshots_csv(&traj.snapshots)?)?;
    }
    Ok(())
}

/// Named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oleinik,
    Decay,
    Contraction,
    Comparison,
    Entropy,
    Tails,
    NonlocalComparison,
    KernelBound,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Oleinik,
        Suite::Decay,
        Suite::Contraction,
        Suite::Comparison,
        Suite::Entropy,
        Suite::Tails,
        Suite::NonlocalComparison,
        Suite::KernelBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oleinik => "oleinik",
            Suite::Decay => "decay",
            Suite::Contraction => "contraction",
            Suite::Comparison => "comparison",
            Suite::Entropy => "entropy",
            Suite::Tails => "tails",
            Suite::NonlocalComparison => "nonlocal_comparison",
            Suite::KernelBound => "kernel_bound",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}; expected one of {}", names(&Suite::ALL))))
    }
}

fn names<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn run_suite(suite: Suite, s: &Settings) -> Result<Outcome> {
    match suite {
        Suite::Oleinik => oleinik_suite(s),
        Suite::Decay => decay_suite(s),
        Suite::Contraction => contraction_suite(s),
        Suite::Comparison => comparison_suite(s),
        Suite::Entropy => entropy_suite(s),
        Suite::Tails => tails_suite(s),
        Suite::NonlocalComparison => nonlocal_comparison_suite(s),
        Suite::KernelBound => kernel_bound_suite(s),
    }
}

fn require_nonnegative(datum: &InitialDatum, what: &str) -> Result<()> {
    if datum.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{what} needs a nonnegative datum, got {}", datum.name())))
    }
}

/// One-sided estimate at `t in {1, 2, 4, 8}` on `dx` and `dx/2`, plus the
/// explicit sup bound on both runs.
pub fn oleinik_suite(s: &Settings) -> Result<Outcome> {
    require_nonnegative(&s.datum, "the one-sided estimate")?;
    let times = [1.0, 2.0, 4.0, 8.0];
    let mut out = Outcome::new("oleinik");
    let runs: Vec<Result<Trajectory>> = [s.dx, s.dx / 2.0]
        .par_iter()
        .map(|&dx| {
            let g = domain_for(&s.datum, s.q, 8.0, dx, 10.0, 10.0)?;
            let phi = make_initial_datum(&s.datum, &g)?;
            run(&phi, &s.params(&g, &times))
        })
        .collect();
    let mut excess = [[0.0; 4]; 2];
    for (level, traj) in runs.into_iter().enumerate() {
        let traj = traj?;
        for (i, snap) in traj.snapshots.iter().enumerate() {
            let inner = interior_window(&snap.u, &traj.params, 1.0)?;
            let mut r = oleinik_margin(&inner, s.q, snap.t, s.tol.scheme)?;
            r.name = format!("oleinik dx={} t={}", traj.params.grid.dx, snap.t);
            excess[level][i] = r.get("excess").unwrap_or(0.0);
            out.summary.push(SummaryRow::new(snap.t, format!("m_t dx={}", traj.params.grid.dx), r.get("m_t").unwrap_or(0.0)));
            out.reports.push(r);
        }
        let mut sup = sup_bound_check(&traj, s.tol.sup)?;
        sup.name = format!("sup_bound dx={}", traj.params.grid.dx);
        out.reports.push(sup);
        out.record(format!("box dx={}", traj.params.grid.dx), traj, &s.tol);
    }
    let mut refine = Report::new("oleinik refinement", 0.0);
    for (i, t) in times.iter().enumerate() {
        let (c, f) = (excess[0][i], excess[1][i]);
        refine.value(format!("excess t={t} dx"), c).value(format!("excess t={t} dx/2"), f);
        refine.check(format!("t={t}: excess {f:.3e} on dx/2 is not at most half of {c:.3e}"), f <= 0.5 * c);
    }
    out.reports.push(refine);
    Ok(out)
}

/// Decay slopes for `q in {1.25, 1.5, 1.75}`, `p in {1, 2, inf}` over `t in [1, 100]`.
pub fn decay_suite(s: &Settings) -> Result<Outcome> {
    let qs = [1.25, 1.5, 1.75];
    let times = log_times(1.0, 100.0, 4);
    let runs: Vec<Result<Trajectory>> = qs
        .par_iter()
        .map(|&q| {
            let g = domain_for(&s.datum, q, 100.0, s.dx, 30.0, 20.0)?;
            let phi = make_initial_datum(&s.datum, &g)?;
            run(&phi, &Settings { q, ..s.clone() }.params(&g, &times))
        })
        .collect();
    let mut out = Outcome::new("decay");
    for (q, traj) in qs.iter().zip(runs) {
        let traj = traj?;
        for p in [1.0, 2.0, f64::INFINITY] {
            let r = decay_fit(&traj, p, s.tol.slope)?;
            out.summary.push(SummaryRow::new(*q, format!("slope p={p}"), r.get("slope").unwrap_or(f64::NAN)));
            out.reports.push(r);
        }
        if traj.initial.is_nonnegative() {
            let mut sup = sup_bound_check(&traj, s.tol.sup)?;
            sup.name = format!("sup_bound q={q}");
            out.reports.push(sup);
        }
        out.record(format!("q={q}"), traj, &s.tol);
    }
    Ok(out)
}

/// A random datum: three boxes with heights in `[lo, hi]` on `[-2, 2]`.
fn random_boxes(rng: &mut ChaCha8Rng, g: &Grid, lo: f64, hi: f64) -> Result<GridFunction> {
    let mut acc = GridFunction::zeros(*g);
    for _ in 0..3 {
        let left = rng.gen_range(-2.0..1.5);
        let width = rng.gen_range(0.2..1.0);
        let height = rng.gen_range(lo..hi);
        let b = make_initial_datum(&InitialDatum::Box { height, left, right: left + width }, g)?;
        acc = acc.axpby(1.0, &b, 1.0)?;
    }
    Ok(acc)
}

fn pair_grid(s: &Settings) -> Result<Grid> {
    grid_covering(-8.0, 12.0, s.dx.max(1.0 / 128.0))
}

fn run_pairs(s: &Settings, pairs: Vec<(GridFunction, GridFunction)>, name: &str) -> Result<Outcome> {
    let times = [0.5, 1.0, 2.0];
    let runs: Vec<Result<(Trajectory, Trajectory)>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let p = s.params(a.grid(), &times);
            let mut both = run_ensemble(&[a.clone(), b.clone()], &p)?;
            let b = both.pop().unwrap();
            Ok((both.pop().unwrap(), b))
        })
        .collect();
    let mut out = Outcome::new(name);
    for (i, r) in runs.into_iter().enumerate() {
        let (a, b) = r?;
        let mut rep = contraction_check(&a, &b, 1e-12)?;
        rep.name = format!("{name} pair {i}");
        out.summary.push(SummaryRow::new(i as f64, "l1_initial", rep.get("l1_initial").unwrap_or(0.0)));
        out.summary.push(SummaryRow::new(i as f64, "l1_final", rep.get("l1 t=2").unwrap_or(0.0)));
        out.reports.push(rep);
        if a.initial.is_nonnegative() {
            let mut pos = Report::new(format!("{name} nonnegativity {i}"), 0.0);
            let worst = a.snapshots.iter().map(|s| s.u.min()).fold(0.0, f64::min);
            pos.value("min", worst);
            pos.check(format!("negative value {worst:e}"), worst >= 0.0);
            out.reports.push(pos);
        }
        out.record(format!("{name} {i}a"), a, &s.tol);
        out.record(format!("{name} {i}b"), b, &s.tol);
    }
    Ok(out)
}

/// L1 and positive-part contraction on 20 random signed datum pairs.
pub fn contraction_suite(s: &Settings) -> Result<Outcome> {
    let g = pair_grid(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let pairs = (0..20)
        .map(|_| Ok((random_boxes(&mut rng, &g, -1.0, 2.0)?, random_boxes(&mut rng, &g, -1.0, 2.0)?)))
        .collect::<Result<Vec<_>>>()?;
    run_pairs(s, pairs, "contraction")
}

/// Order preservation on 20 random ordered pairs `phi <= phi + (nonnegative)`.
pub fn comparison_suite(s: &Settings) -> Result<Outcome> {
    let g = pair_grid(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed);
    let pairs = (0..20)
        .map(|i| {
            let (lo, hi) = if i % 2 == 0 { (0.0, 2.0) } else { (-1.0, 2.0) };
            let a = random_boxes(&mut rng, &g, lo, hi)?;
            let bump = random_boxes(&mut rng, &g, 0.0, 1.0)?;
            let b = a.axpby(1.0, &bump, 1.0)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    run_pairs(s, pairs, "comparison")
}

/// Twelve bumps: two time windows times six positions along `[x_lo, x_hi]`.
pub fn bump_placements(t_centers: [f64; 2], t_radius: f64, x_lo: f64, x_hi: f64, x_radius: f64) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::with_capacity(12);
    for tc in t_centers {
        for i in 0..6 {
            let xc = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
            out.push((tc, t_radius, xc, x_radius));
        }
    }
    out
}

pub const ENTROPY_KS: [f64; 4] = [-1.0, 0.0, 0.5, 1.0];

fn entropy_cases(placements: &[(f64, f64, f64, f64)]) -> Vec<EntropyTestCase> {
    let mut out = Vec::new();
    for &k in &ENTROPY_KS {
        for &(t_center, t_radius, x_center, x_radius) in placements {
            out.push(EntropyTestCase { k, t_center, t_radius, x_center, x_radius });
        }
    }
    out
}

/// Kruzkov residuals on N-wave trajectories and on a simulated run, each at
/// two resolutions; the change under refinement must stay below `tol.quad`.
pub fn entropy_suite(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::new("entropy");
    let nw = NWave::new(1.0, s.q)?;
    // placements straddle the rarefaction foot, the interior and the shock front
    let nw_cases = entropy_cases(&bump_placements([1.0, 2.0], 0.4, -0.2, nw.front(2.0) + 0.2, 0.6));
    let sim_cases = entropy_cases(&bump_placements([1.0, 2.0], 0.4, -0.5, 2.5, 0.6));
    let levels = [s.dx, s.dx / 2.0];
    let results: Vec<Result<(Vec<Report>, Vec<Report>, Trajectory)>> = levels
        .par_iter()
        .enumerate()
        .map(|(level, &dx)| {
            let dt = 0.01 / (1 << level) as f64;
            let n = (2.9 / dt).round() as usize;
            let times: Vec<f64> = (0..=n).map(|k| 0.1 + k as f64 * dt).collect();
            let g = grid_covering(-4.0, 8.0, dx)?;
            let ntraj = nwave_trajectory(&nw, &g, &times)?;
            let a = entropy_residuals(&ntraj, &nw_cases, s.tol.quad)?;
            let phi = make_initial_datum(&InitialDatum::standard_box(), &g)?;
            let traj = run(&phi, &s.params(&g, &times))?;
            let b = entropy_residuals(&traj, &sim_cases, s.tol.quad)?;
            Ok((a, b, traj))
        })
        .collect();
    let mut per_level = Vec::new();
    for (level, r) in results.into_iter().enumerate() {
        let (a, b, traj) = r?;
        if level == 0 {
            out.record("box".into(), traj, &s.tol);
        }
        per_level.push((a, b));
    }
    let mut refine = Report::new("entropy refinement", s.tol.quad);
    for (kind, idx) in [("nwave", 0), ("simulated", 1)] {
        let coarse = if idx == 0 { &per_level[0].0 } else { &per_level[0].1 };
        let fine = if idx == 0 { &per_level[1].0 } else { &per_level[1].1 };
        let mut worst: f64 = 0.0;
        for (i, (c, f)) in coarse.iter().zip(fine).enumerate() {
            let (rc, rf) = (c.get("residual").unwrap_or(0.0), f.get("residual").unwrap_or(0.0));
            worst = worst.max((rc - rf).abs());
            out.summary.push(SummaryRow::new(i as f64, format!("{kind} residual"), rf));
            let mut r = f.clone();
            r.name = format!("{kind} {}", f.name);
            out.reports.push(r);
        }
        refine.value(format!("{kind} max refinement change"), worst);
        refine.check(format!("{kind}: residuals moved by {worst:.3e} under refinement"), worst < s.tol.quad);
    }
    out.reports.push(refine);
    Ok(out)
}

/// Tail control, L1 moduli of continuity, the weakened initial trace and
/// mass conservation on the standard run.
pub fn tails_suite(s: &Settings) -> Result<Outcome> {
    let times = [1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 2.0, 4.0, 8.0];
    let g = grid_covering(-16.0, 24.0, s.dx)?;
    let phi = make_initial_datum(&s.datum, &g)?;
    let traj = run(&phi, &s.params(&g, &times))?;
    let mut out = Outcome::new("tails");
    let probes: Vec<(f64, f64)> =
        [1.0, 2.0, 4.0, 8.0].iter().flat_map(|&t| [2.0, 3.0, 4.0, 6.0].map(|r| (t, r))).collect();
    out.reports.push(tail_bound_check(&traj, (8.0, 2.0), &probes)?);
    let mut modulus = Report::new("l1_modulus", 0.0);
    for k in [1usize, 4, 16] {
        let h = k as f64 * g.dx();
        let m0 = l1_modulus(&traj.initial, h)?;
        for snap in &traj.snapshots {
            let m = l1_modulus(&snap.u, h)?;
            let bound = m0 + 2.0 * traj.tail_budget_at(snap.t);
            modulus.value(format!("h={k}dx t={}", snap.t), m);
            modulus.check(format!("modulus {m:.4e} > {bound:.4e} at h={k}dx, t={}", snap.t), m <= bound + 1e-12);
            out.summary.push(SummaryRow::new(snap.t, format!("modulus h={k}dx"), m));
        }
    }
    out.reports.push(modulus);
    out.reports.push(initial_trace(&traj, 4.0, 1.0)?);
    out.record("standard".into(), traj, &s.tol);
    Ok(out)
}

/// A random configuration on `g`: `z >= 0` a sum of bumps plus a constant,
/// `w` a windowed trigonometric sum vanishing near the boundary.
pub fn random_comparison_case(kernel: &Kernel, g: &Grid, beta: f64, rng: &mut ChaCha8Rng) -> Result<ComparisonCase> {
    let mut zs = Vec::new();
    for _ in 0..4 {
        zs.push((rng.gen_range(0.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.2..1.5)));
    }
    let base = if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..0.5) };
    let mut ws = Vec::new();
    for _ in 0..3 {
        ws.push((rng.gen_range(-1.0..1.0), rng.gen_range(0.3..4.0), rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    let half = 0.5 * (g.x_max() - g.x_min()) - kernel.support_radius() - 0.5;
    let mid = 0.5 * (g.x_max() + g.x_min());
    let z = GridFunction::from_fn(*g, |x| base + zs.iter().map(|(a, c, s)| a * (-((x - c) / s).powi(2)).exp()).sum::<f64>());
    let w = GridFunction::from_fn(*g, |x| {
        let y = (x - mid) / half;
        let window = if y.abs() < 1.0 { (1.0 - y * y).powi(2) } else { 0.0 };
        window * ws.iter().map(|(a, k, p)| a * (k * x + p).sin()).sum::<f64>()
    });
    ComparisonCase::new(kernel, beta, z, w)
}

/// 1000 seeded random cases, checked at every maximiser of `w`.
pub fn nonlocal_comparison_suite(s: &Settings) -> Result<Outcome> {
    let g = grid_covering(-4.0, 4.0, 1.0 / 32.0)?;
    let kernel = Kernel::new(s.kernel.family, s.kernel.width, g.dx())?;
    let betas = [0.0, 0.5, 1.0, (2.0 - s.q) / (s.q - 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = Outcome::new("nonlocal_comparison");
    let mut agg = Report::new("nonlocal_comparison", s.tol.comparison);
    let (mut max_a, mut max_margin, mut violations, mut checked) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize, 0usize);
    for i in 0..1000 {
        let beta = betas[i % betas.len()];
        let case = random_comparison_case(&kernel, &g, beta, &mut rng)?;
        for x0 in case.argmax_ties() {
            let r = check_nonlocal_comparison(&kernel, &case.at(&kernel, x0), s.tol.comparison)?;
            checked += 1;
            max_a = max_a.max(r.get("A_z(x0)").unwrap_or(0.0));
            max_margin = max_margin.max(r.get("margin").unwrap_or(0.0));
            if !r.passed() {
                violations += 1;
                agg.failures.extend(r.failures.iter().map(|f| format!("case {i}, x0 = {x0}: {f}")));
            }
        }
    }
    agg.value("cases", 1000.0).value("maximisers_checked", checked as f64);
    agg.value("violations", violations as f64).value("max_A_z", max_a).value("max_margin", max_margin);
    agg.check(format!("{violations} violations"), violations == 0);
    out.summary.push(SummaryRow::new(0.0, "violations", violations as f64));
    out.summary.push(SummaryRow::new(0.0, "max_A_z", max_a));
    out.summary.push(SummaryRow::new(0.0, "max_margin", max_margin));
    out.reports.push(agg);
    Ok(out)
}

pub fn kernel_bound_suite(s: &Settings) -> Result<Outcome> {
    run_kernel_bound_sweep(&StudySpec::new(StudyKind::KernelBoundSweep, s.clone()))
}

/// Study kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    LongTimeNonnegative,
    LongTimeSignChanging,
    VanishingViscosity,
    RescalingFamily,
    KernelBoundSweep,
}

impl StudyKind {
    pub const ALL: [StudyKind; 5] = [
        StudyKind::LongTimeNonnegative,
        StudyKind::LongTimeSignChanging,
        StudyKind::VanishingViscosity,
        StudyKind::RescalingFamily,
        StudyKind::KernelBoundSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::LongTimeNonnegative => "long_time_nonnegative",
            StudyKind::LongTimeSignChanging => "long_time_sign_changing",
            StudyKind::VanishingViscosity => "vanishing_viscosity",
            StudyKind::RescalingFamily => "rescaling_family",
            StudyKind::KernelBoundSweep => "kernel_bound_sweep",
        }
    }

    /// Sweep used when the configuration gives none.
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            StudyKind::LongTimeNonnegative | StudyKind::LongTimeSignChanging => vec![1.0, 3.0, 10.0, 30.0, 100.0],
            StudyKind::VanishingViscosity => vec![0.4, 0.2, 0.1, 0.05],
            StudyKind::RescalingFamily => vec![1.0, 2.0, 4.0, 8.0],
            StudyKind::KernelBoundSweep => vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        }
    }

    /// Datum used when the configuration gives none.
    pub fn default_datum(self) -> InitialDatum {
        match self {
            StudyKind::LongTimeSignChanging => InitialDatum::standard_two_boxes(),
            _ => InitialDatum::standard_box(),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<StudyKind> {
        StudyKind::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown study {s:?}; expected one of {}", names(&StudyKind::ALL))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub settings: Settings,
    /// Times, viscosities or scaling factors depending on `kind`.
    pub sweep: Vec<f64>,
}

impl StudySpec {
    /// The study with its default sweep and datum.
    pub fn new(kind: StudyKind, settings: Settings) -> StudySpec {
        StudySpec { kind, settings: Settings { datum: kind.default_datum(), ..settings }, sweep: kind.default_sweep() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() || self.sweep.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("sweep values must be positive and finite".into()));
        }
        let increasing = self.sweep.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.sweep.windows(2).all(|w| w[1] < w[0]);
        match self.kind {
            StudyKind::VanishingViscosity if !decreasing => {
                Err(Error::InvalidParameter("viscosities must be strictly decreasing".into()))
            }
            StudyKind::VanishingViscosity => Ok(()),
            _ if !increasing => Err(Error::InvalidParameter("sweep values must be strictly increasing".into())),
            StudyKind::LongTimeNonnegative | StudyKind::LongTimeSignChanging => {
                let q = self.settings.q;
                if !(q > 1.0 && q < 2.0) {
                    return Err(Error::InvalidParameter(format!("long-time studies need 1 < q < 2, got {q}")));
                }
                if self.settings.datum.mass() == 0.0 {
                    return Err(Error::Precondition("N-wave comparison needs a datum with nonzero mass".into()));
                }
                let nonneg = self.settings.datum.is_nonnegative();
                if self.kind == StudyKind::LongTimeNonnegative && !nonneg {
                    return Err(Error::Precondition("long_time_nonnegative needs a nonnegative datum".into()));
                }
                if self.kind == StudyKind::LongTimeSignChanging && nonneg {
                    return Err(Error::Precondition("long_time_sign_changing needs a sign-changing datum".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub fn run_study(spec: &StudySpec) -> Result<Outcome> {
    spec.validate()?;
    match spec.kind {
        StudyKind::LongTimeNonnegative | StudyKind::LongTimeSignChanging => run_long_time(spec),
        StudyKind::VanishingViscosity => run_vanishing_viscosity(spec),
        StudyKind::RescalingFamily => run_rescaling_family(spec),
        StudyKind::KernelBoundSweep => run_kernel_bound_sweep(spec),
    }
}

/// Reduction factor of the `p = 1` scaled distance that counts as convergence
/// toward the N-wave over the sweep.
pub const LONG_TIME_REDUCTION: f64 = 3.0;

/// Scaled distances `t^((1/q)(1-1/p)) ||u(t) - w_M(t)||_p` at the sweep times.
/// The `p = 1` curve must decrease strictly and by [`LONG_TIME_REDUCTION`]
/// overall; the `p = 2` curve is reported only.
pub fn run_long_time(spec: &StudySpec) -> Result<Outcome> {
    spec.validate()?;
    let s = &spec.settings;
    let t_final = *spec.sweep.last().unwrap();
    let g = domain_for(&s.datum, s.q, t_final, s.dx, 30.0, 20.0)?;
    let phi = make_initial_datum(&s.datum, &g)?;
    let traj = run(&phi, &s.params(&g, &spec.sweep))?;
    let nw = NWave::new(phi.mass(), s.q)?;
    let mut out = Outcome::new(spec.kind.name());
    for p in [1.0, 2.0] {
        let name = format!("long_time {} p={p}", s.datum.name());
        let mut r = if p == 1.0 { Report::new(name, 0.0) } else { Report::informational(name) };
        let mut curve = Vec::new();
        for snap in &traj.snapshots {
            let d = nwave_distance(&snap.u, &nw, snap.t, p)?;
            r.value(format!("t={}", snap.t), d);
            out.summary.push(SummaryRow::new(snap.t, format!("distance p={p}"), d));
            curve.push((snap.t, d));
        }
        let reduction = curve[0].1 / curve[curve.len() - 1].1;
        r.value("reduction", reduction);
        if p == 1.0 {
            for w in curve.windows(2) {
                r.check(format!("distance rose from {:.5} to {:.5} at t={}", w[0].1, w[1].1, w[1].0), w[1].1 < w[0].1);
            }
            r.check(
                format!("distance fell by {reduction:.3}x, short of {LONG_TIME_REDUCTION}x"),
                reduction >= LONG_TIME_REDUCTION,
            );
        }
        out.reports.push(r);
    }
    out.record(s.datum.name().to_string(), traj, &s.tol);
    Ok(out)
}

/// Averages pairs of fine cells onto the coarse grid `coarse`.
fn restrict_to(fine: &GridFunction, coarse: &Grid) -> Result<GridFunction> {
    let ratio = (coarse.dx() / fine.dx()).round() as usize;
    if ratio == 0 || (coarse.x_min() - fine.grid().x_min()).abs() > 1e-12 || fine.len() != ratio * coarse.len() {
        return Err(Error::GridMismatch("fine grid does not refine the coarse grid".into()));
    }
    let v = fine.values();
    GridFunction::from_values(*coarse, (0..coarse.len()).map(|j| v[j * ratio..(j + 1) * ratio].iter().sum::<f64>() / ratio as f64).collect())
}

/// `||u^mu(t) - u^0(t)||_1` along the viscosity sweep at `t = t_final`, on
/// `dx` and `dx/2`. The floor is the distance between the two inviscid runs.
pub fn run_vanishing_viscosity(spec: &StudySpec) -> Result<Outcome> {
    spec.validate()?;
    let s = &spec.settings;
    let t = s.t_final;
    // the viscous step limit scales like dx^2/mu, so this study runs no finer than 1/128
    let dx = s.dx.max(1.0 / 128.0);
    let levels = [dx, dx / 2.0];
    let mus: Vec<f64> = std::iter::once(0.0).chain(spec.sweep.iter().copied()).collect();
    let jobs: Vec<(usize, f64)> = (0..2).flat_map(|l| mus.iter().map(move |&m| (l, m))).collect();
    let results: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|&(l, mu)| {
            let coarse = domain_for(&s.datum, s.q, t, dx, 6.0, 6.0)?;
            let g = Grid::with_cells(coarse.x_min(), levels[l], coarse.len() << l)?;
            let phi = make_initial_datum(&s.datum, &g)?;
            let mut p = s.params(&g, &[t]);
            p.mu = mu;
            run(&phi, &p)
        })
        .collect();
    let mut trajs = Vec::new();
    for r in results {
        trajs.push(r?);
    }
    let m = mus.len();
    let coarse_grid = *trajs[0].grid();
    let final_of = |k: usize| trajs[k].snapshots.last().map(|s| s.u.clone()).unwrap();
    let floor = final_of(0).axpby(1.0, &restrict_to(&final_of(m), &coarse_grid)?, -1.0)?.l1();
    let mut out = Outcome::new("vanishing_viscosity");
    let mut r = Report::new("vanishing_viscosity", 0.0);
    r.value("floor", floor);
    out.summary.push(SummaryRow::new(0.0, "floor", floor));
    let mut dist = [Vec::new(), Vec::new()];
    for (l, d) in dist.iter_mut().enumerate() {
        let base = final_of(l * m);
        for i in 1..m {
            d.push(final_of(l * m + i).axpby(1.0, &base, -1.0)?.l1());
        }
    }
    for (i, &mu) in spec.sweep.iter().enumerate() {
        r.value(format!("mu={mu} dx"), dist[0][i]).value(format!("mu={mu} dx/2"), dist[1][i]);
        out.summary.push(SummaryRow::new(mu, "distance dx", dist[0][i]));
        out.summary.push(SummaryRow::new(mu, "distance dx/2", dist[1][i]));
    }
    let above: Vec<usize> = (0..spec.sweep.len()).filter(|&i| dist[0][i] > floor).collect();
    if above.len() < spec.sweep.len() {
        let below: Vec<String> = (0..spec.sweep.len()).filter(|i| !above.contains(i)).map(|i| spec.sweep[i].to_string()).collect();
        let mut info = Report::informational("vanishing_viscosity below floor");
        for i in (0..spec.sweep.len()).filter(|i| !above.contains(i)) {
            info.value(format!("mu={}", spec.sweep[i]), dist[0][i]);
        }
        info.failures.push(format!("viscosities {} fall below the floor", below.join(", ")));
        out.reports.push(info);
    }
    for w in above.windows(2) {
        let (a, b) = (w[0], w[1]);
        r.check(format!("distance did not decrease from mu={} to mu={}", spec.sweep[a], spec.sweep[b]), dist[0][b] < dist[0][a]);
        r.check(
            format!("ordering between mu={} and mu={} changed under refinement", spec.sweep[a], spec.sweep[b]),
            dist[1][b] < dist[1][a],
        );
    }
    out.reports.push(r);
    for (k, traj) in trajs.into_iter().enumerate() {
        let (l, mu) = jobs[k];
        if l == 0 {
            out.record(format!("mu={mu}"), traj, &s.tol);
        }
    }
    Ok(out)
}

/// `u_lambda(1)` from the rescaled original run and from a direct run of the
/// rescaled system, compared with each other and with `w_M(1)`.
pub fn run_rescaling_family(spec: &StudySpec) -> Result<Outcome> {
    spec.validate()?;
    let s = &spec.settings;
    let lambdas = &spec.sweep;
    let lmax = *lambdas.last().unwrap();
    let t_src: Vec<f64> = lambdas.iter().map(|l| l.powf(s.q)).collect();
    let g_src = domain_for(&s.datum, s.q, lmax.powf(s.q), s.dx, 20.0, 10.0)?;
    let phi = make_initial_datum(&s.datum, &g_src)?;
    let source = run(&phi, &s.params(&g_src, &t_src))?;
    let nw = NWave::new(phi.mass(), s.q)?;
    let g = grid_covering(-4.0, nw.front(1.0).max(s.datum.support().1) + 4.0, s.dx)?;
    let target_for = |level: usize| Grid::with_cells(g.x_min(), g.dx() / (1 << level) as f64, g.len() << level);
    let direct: Vec<Result<(Trajectory, Trajectory)>> = lambdas
        .par_iter()
        .map(|&lam| {
            let one = |level: usize| -> Result<Trajectory> {
                let g = target_for(level)?;
                let phi_l = make_initial_datum(&s.datum.rescaled(lam), &g)?;
                let mut p = s.params(&g, &[1.0]);
                p.lambda = lam;
                run(&phi_l, &p)
            };
            Ok((one(0)?, one(1)?))
        })
        .collect();
    let mut out = Outcome::new("rescaling_family");
    let mut r = Report::new("rescaling_family", 0.0);
    let mut prev = f64::INFINITY;
    for (lam, d) in lambdas.iter().zip(direct) {
        let (coarse, fine) = d?;
        let a = rescale_trajectory(&source, *lam, &[1.0], &g)?.snapshots.remove(0).u;
        let b = coarse.snapshots.last().unwrap().u.clone();
        let bf = restrict_to(&fine.snapshots.last().unwrap().u, &g)?;
        let gap = a.axpby(1.0, &b, -1.0)?.l1();
        let envelope = 2.0 * b.axpby(1.0, &bf, -1.0)?.l1() + 1e-12;
        let to_nwave = nwave_distance(&a, &nw, 1.0, 1.0)?;
        r.value(format!("lambda={lam} pipelines"), gap).value(format!("lambda={lam} envelope"), envelope);
        r.value(format!("lambda={lam} distance"), to_nwave).value(format!("lambda={lam} mass"), a.mass());
        r.check(format!("lambda={lam}: pipelines differ by {gap:.3e} > {envelope:.3e}"), gap <= envelope);
        r.check(format!("lambda={lam}: distance {to_nwave:.4} did not decrease"), to_nwave < prev);
        out.summary.push(SummaryRow::new(*lam, "pipeline_gap", gap));
        out.summary.push(SummaryRow::new(*lam, "envelope", envelope));
        out.summary.push(SummaryRow::new(*lam, "distance_to_nwave", to_nwave));
        prev = to_nwave;
        out.record(format!("lambda={lam}"), coarse, &s.tol);
    }
    out.reports.push(r);
    out.record("source".into(), source, &s.tol);
    Ok(out)
}

/// Smooth test functions of the kernel-bound sweep.
pub fn bound_test_functions() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("gaussian", |x| (-x * x).exp()),
        ("gaussian_sine", |x| (-0.5 * x * x).exp() * (2.0 * x).sin()),
        ("sech2", |x| 1.0 / x.cosh().powi(2)),
    ]
}

/// `second_order_bound_ratio` over `lambda x psi x p`; bounded by `m2` and,
/// for the quadratic row, equal to `m2/2`.
pub fn run_kernel_bound_sweep(spec: &StudySpec) -> Result<Outcome> {
    spec.validate()?;
    let s = &spec.settings;
    let dx = 1.0 / 1024.0;
    let mut out = Outcome::new("kernel_bound_sweep");
    let quad_grid = grid_covering(-2.0, 2.0, dx)?;
    let smooth_grid = grid_covering(-6.0, 6.0, dx)?;
    let kernel = Kernel::new(s.kernel.family, s.kernel.width, dx)?;
    let half_m2 = kernel.m2() / 2.0;
    let mut r = Report::new("kernel_bound", 1e-10);
    r.value("m2/2", half_m2);
    let quad = GridFunction::from_fn(quad_grid, |x| x * x);
    for &lam in &spec.sweep {
        let v = second_order_bound_ratio(&kernel, &quad, lam, Norm::Inf)?;
        r.value(format!("quadratic lambda={lam}"), v);
        r.check(format!("quadratic ratio {v:.12} != m2/2 at lambda={lam}"), (v - half_m2).abs() <= 1e-10);
        out.summary.push(SummaryRow::new(lam, "quadratic inf", v));
    }
    let mut sup: f64 = 0.0;
    for (name, f) in bound_test_functions() {
        let psi = GridFunction::from_fn(smooth_grid, f);
        let rows: Vec<Result<Vec<(f64, Norm, f64)>>> = spec
            .sweep
            .par_iter()
            .map(|&lam| {
                [Norm::L1, Norm::L2, Norm::Inf]
                    .into_iter()
                    .map(|p| Ok((lam, p, second_order_bound_ratio(&kernel, &psi, lam, p)?)))
                    .collect()
            })
            .collect();
        for row in rows {
            for (lam, p, v) in row? {
                sup = sup.max(v);
                r.value(format!("{name} lambda={lam} p={}", p.exponent()), v);
                r.check(format!("{name}: ratio {v:.4} above m2 at lambda={lam}, p={}", p.exponent()), v <= 2.0 * half_m2);
                out.summary.push(SummaryRow::new(lam, format!("{name} p={}", p.exponent()), v));
            }
        }
    }
    r.value("empirical C", sup);
    out.reports.push(r);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        for k in StudyKind::ALL {
            assert_eq!(k.name().parse::<StudyKind>().unwrap(), k);
        }
        assert!("olenik".parse::<Suite>().is_err());
        assert!("long_time".parse::<StudyKind>().is_err());
    }

    #[test]
    fn log_times_span() {
        let t = log_times(1.0, 100.0, 4);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], 1.0);
        assert_eq!(t[8], 100.0);
        assert!((t[4] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn study_validation() {
        let s = Settings::default();
        let mut spec = StudySpec::new(StudyKind::VanishingViscosity, s.clone());
        assert!(spec.validate().is_ok());
        spec.sweep = vec![0.05, 0.1];
        assert!(spec.validate().is_err());
        let mut lt = StudySpec::new(StudyKind::LongTimeSignChanging, s.clone());
        assert!(lt.validate().is_ok());
        lt.settings.datum = InitialDatum::DipoleZeroMass { height: 1.0, half_width: 1.0 };
        assert!(matches!(lt.validate(), Err(Error::Precondition(_))));
        let mut q2 = StudySpec::new(StudyKind::LongTimeNonnegative, s);
        q2.settings.q = 2.0;
        assert!(q2.validate().is_err());
    }

    #[test]
    fn restriction_averages_pairs() {
        let fine = GridFunction::from_values(Grid::with_cells(0.0, 0.5, 4).unwrap(), vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let coarse = Grid::with_cells(0.0, 1.0, 2).unwrap();
        assert_eq!(restrict_to(&fine, &coarse).unwrap().values(), &[2.0, 6.0]);
    }

    #[test]
    fn comparison_cases_are_valid() {
        let g = grid_covering(-4.0, 4.0, 1.0 / 32.0).unwrap();
        let k = Kernel::new(crate::kernel::KernelFamily::Uniform, 1.0, g.dx()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = random_comparison_case(&k, &g, 0.5, &mut rng).unwrap();
            assert!(c.z.is_nonnegative());
            assert!(c.w.values()[c.x0] >= 0.0);
            assert!(c.w.values()[..8].iter().all(|&v| v == 0.0));
        }
    }
}
