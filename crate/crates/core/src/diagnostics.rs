//! Measurements of the estimates on fields and trajectories. Every check
//! returns a [`Report`] whose verdict is `Pass` iff all asserted margins
//! hold within the stated tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::flux;
use crate::grid::{Grid, GridFunction};
use crate::kernel::{Convolver, Kernel};
use crate::nonlocal::apply_l_at;
use crate::profiles::NWave;
use crate::solver::{GridSpec, SimParams, Snapshot, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Informational => "informational",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub values: Vec<(String, f64)>,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// One line per failed assertion.
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Report {
        Report { name: name.into(), values: Vec::new(), verdict: Verdict::Pass, tolerance, failures: Vec::new() }
    }

    pub fn informational(name: impl Into<String>) -> Report {
        Report { verdict: Verdict::Informational, ..Report::new(name, 0.0) }
    }

    pub fn value(&mut self, label: impl Into<String>, v: f64) -> &mut Report {
        self.values.push((label.into(), v));
        self
    }

    /// Records an assertion; a false `ok` turns the verdict into `Fail`.
    pub fn check(&mut self, what: impl Into<String>, ok: bool) -> &mut Report {
        if !ok {
            self.verdict = Verdict::Fail;
            self.failures.push(what.into());
        }
        self
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.iter().find(|(l, _)| l == label).map(|&(_, v)| v)
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut s = format!("report {} verdict={} tolerance={:e}\n", self.name, self.verdict, self.tolerance);
        for (l, v) in &self.values {
            s.push_str(&format!("  {l} = {v:.12e}\n"));
        }
        for f in &self.failures {
            s.push_str(&format!("  failed: {f}\n"));
        }
        s
    }

    /// Rows `(report, label, value, verdict, tolerance)`.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        self.values
            .iter()
            .map(|(l, v)| {
                [self.name.clone(), l.clone(), format!("{v:e}"), self.verdict.to_string(), format!("{:e}", self.tolerance)]
            })
            .collect()
    }
}

pub fn all_pass(reports: &[Report]) -> bool {
    reports.iter().all(Report::passed)
}

/// Discrete `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(lp_of(u.values(), u.dx(), p))
}

fn lp_of(v: &[f64], dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum::<f64>() * dx
    } else if p == 2.0 {
        (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
    } else {
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Cells at distance at least `support_radius(J_lambda) + margin` from both ends.
pub fn interior_window(u: &GridFunction, params: &SimParams, margin: f64) -> Result<GridFunction> {
    let r = if params.nonlocal_rate() > 0.0 { params.rescaled_kernel()?.support_radius() } else { 0.0 };
    let g = u.grid();
    u.window(g.x_min() + r + margin, g.x_max() - r - margin)
}

/// `max_j (u_{j+1}^(q-1) - u_j^(q-1)) / dx` times `t`, against `1 + tol_scheme`.
pub fn oleinik_margin(u: &GridFunction, q: f64, t: f64, tol_scheme: f64) -> Result<Report> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if let Some(j) = u.values().iter().position(|&v| v < 0.0) {
        return Err(Error::Precondition(format!(
            "one-sided estimate needs nonnegative data, cell {j} holds {}",
            u.values()[j]
        )));
    }
    let e = q - 1.0;
    let m = u
        .values()
        .windows(2)
        .map(|w| (w[1].powf(e) - w[0].powf(e)) / u.dx())
        .fold(0.0f64, f64::max);
    let mt = m * t;
    let mut r = Report::new(format!("oleinik t={t}"), tol_scheme);
    r.value("t", t).value("max_forward_difference", m).value("m_t", mt).value("excess", (mt - 1.0).max(0.0));
    r.check(format!("m*t = {mt:.6} exceeds 1 + {tol_scheme}"), mt <= 1.0 + tol_scheme);
    Ok(r)
}

/// `(q M / ((q-1) t))^(1/q)`.
pub fn sup_bound(q: f64, mass: f64, t: f64) -> f64 {
    (q * mass / ((q - 1.0) * t)).powf(1.0 / q)
}

/// Log-log slope of `||u(t)||_p` over the last decade of `t >= 1` snapshots
/// against `-(1/q)(1 - 1/p)`.
pub fn decay_fit(traj: &Trajectory, p: f64, slope_tol: f64) -> Result<Report> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let q = traj.params.q;
    let late: Vec<&Snapshot> = traj.snapshots.iter().filter(|s| s.t >= 1.0).collect();
    let span = late.last().map_or(0.0, |s| s.t) / late.first().map_or(f64::INFINITY, |s| s.t);
    if late.len() < 5 || span < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "decay fit needs at least 5 snapshots with t >= 1 spanning a decade, got {} spanning {span:.3}",
            late.len()
        )));
    }
    let t_last = late.last().unwrap().t;
    let decade: Vec<&&Snapshot> = late.iter().filter(|s| s.t >= t_last / 10.0 * (1.0 - 1e-12)).collect();
    if decade.len() < 3 {
        return Err(Error::Precondition("fewer than 3 snapshots in the last decade".into()));
    }
    let xs: Vec<f64> = decade.iter().map(|s| s.t.ln()).collect();
    let ys: Vec<f64> = decade.iter().map(|s| lp_of(s.u.values(), s.u.dx(), p).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let target = if p.is_infinite() { -1.0 / q } else { -(1.0 / q) * (1.0 - 1.0 / p) };
    let mut r = Report::new(format!("decay q={q} p={p}"), slope_tol);
    r.value("slope", slope).value("target", target).value("deviation", slope - target);
    r.check(format!("slope {slope:.4} deviates from {target:.4}"), (slope - target).abs() <= slope_tol);
    if p.is_infinite() && traj.initial.is_nonnegative() {
        let m = traj.initial_mass();
        let worst = traj
            .snapshots
            .iter()
            .map(|s| s.u.max_abs() - sup_bound(q, m, s.t))
            .fold(f64::NEG_INFINITY, f64::max);
        r.value("sup_bound_excess", worst);
        r.check("explicit sup bound violated", worst <= 1e-10);
    }
    if p == 1.0 {
        let l1 = traj.initial.l1();
        let worst = traj
            .snapshots
            .iter()
            .map(|s| s.u.l1() - l1 - traj.tail_budget_at(s.t))
            .fold(f64::NEG_INFINITY, f64::max);
        r.value("l1_growth", worst);
        r.check("L1 norm grew beyond the tail budget", worst <= 1e-12 * l1.max(1.0));
    }
    Ok(r)
}

/// `||u(t)||_inf <= (q M / ((q-1) t))^(1/q) + tol` at every snapshot of a nonnegative run.
pub fn sup_bound_check(traj: &Trajectory, tol: f64) -> Result<Report> {
    if !traj.initial.is_nonnegative() {
        return Err(Error::Precondition("explicit sup bound applies to nonnegative data".into()));
    }
    let q = traj.params.q;
    let m = traj.initial_mass();
    let mut r = Report::new("sup_bound", tol);
    for s in &traj.snapshots {
        let b = sup_bound(q, m, s.t);
        let sup = s.u.max_abs();
        r.value(format!("ratio t={}", s.t), sup / b);
        r.check(format!("t={}: sup {sup:.6e} above bound {b:.6e}", s.t), sup <= b + tol);
    }
    Ok(r)
}

/// `int_{|x| > 2R} |u|`.
pub fn tail_mass(u: &GridFunction, radius: f64) -> Result<f64> {
    let g = u.grid();
    if !(radius >= 0.0) || !radius.is_finite() || (-2.0 * radius <= g.x_min() && 2.0 * radius >= g.x_max()) {
        return Err(Error::InvalidParameter(format!(
            "2R = {} must fall inside [{}, {}]",
            2.0 * radius,
            g.x_min(),
            g.x_max()
        )));
    }
    Ok(outer_mass(u, 2.0 * radius))
}

/// `int_{|x| > R} |phi|`.
pub fn outer_mass(u: &GridFunction, radius: f64) -> f64 {
    let abs = u.map(f64::abs);
    let g = u.grid();
    abs.integral_over(g.x_min(), -radius) + abs.integral_over(radius, g.x_max())
}

/// Fits `C` in `tail(t, R) <= outer(phi, R) + C (t/R^2 + t^(1/q)/R)` at `calibration`
/// and checks the same bound at every pair in `probes`.
pub fn tail_bound_check(traj: &Trajectory, calibration: (f64, f64), probes: &[(f64, f64)]) -> Result<Report> {
    let q = traj.params.q;
    let shape = |t: f64, r: f64| t / (r * r) + t.powf(1.0 / q) / r;
    let at = |t: f64| {
        traj.snapshot_at(t).ok_or_else(|| Error::Precondition(format!("no snapshot at t = {t}")))
    };
    let (tc, rc) = calibration;
    let excess = tail_mass(at(tc)?, rc)? - outer_mass(&traj.initial, rc);
    let c = excess.max(0.0) / shape(tc, rc);
    let mut r = Report::new("tails", 0.0);
    r.value("C", c);
    for &(t, rad) in probes {
        let lhs = tail_mass(at(t)?, rad)?;
        let rhs = outer_mass(&traj.initial, rad) + c * shape(t, rad) + traj.tail_budget_at(t);
        r.value(format!("tail t={t} R={rad}"), lhs).value(format!("bound t={t} R={rad}"), rhs);
        r.check(format!("tail at t={t}, R={rad}: {lhs:.4e} > {rhs:.4e}"), lhs <= rhs + 1e-14);
    }
    Ok(r)
}

/// `int |u(x + h) - u(x)| dx` with zero extension; `h` must be a whole number of cells.
pub fn l1_modulus(u: &GridFunction, h: f64) -> Result<f64> {
    let dx = u.dx();
    let k = (h.abs() / dx).round();
    if !h.is_finite() || (k * dx - h.abs()).abs() > 1e-9 * dx * k.max(1.0) {
        return Err(Error::InvalidParameter(format!("shift {h} is not a multiple of dx = {dx}")));
    }
    let k = k as usize;
    let v = u.values();
    let n = v.len();
    let ext = |j: usize| if j < n { v[j] } else { 0.0 };
    // indices shifted by k so that j - k ranges over -k..n
    let mut acc = 0.0;
    for j in 0..n + k {
        let left = if j >= k { ext(j - k) } else { 0.0 };
        acc += (ext(j) - left).abs();
    }
    Ok(acc * dx)
}

/// Tensor-product bump `b((t - t_c)/t_r) b((x - x_c)/x_r)` with `b(s) = exp(-1/(1 - s^2))`,
/// paired with a Kruzkov constant `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyTestCase {
    pub k: f64,
    pub t_center: f64,
    pub t_radius: f64,
    pub x_center: f64,
    pub x_radius: f64,
}

fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - s * s;
    let b = (-1.0 / d).exp();
    (b, b * (-2.0 * s / (d * d)))
}

impl EntropyTestCase {
    /// `(phi, phi_t, phi_x)` at `(t, x)`.
    pub fn test_function(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (bt, dbt) = bump((t - self.t_center) / self.t_radius);
        let (bx, dbx) = bump((x - self.x_center) / self.x_radius);
        (bt * bx, dbt / self.t_radius * bx, bt * dbx / self.x_radius)
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kruzkov residual
/// `R = int int |u-k| phi_t + sgn(u-k)(f(u)-f(k)) phi_x + a sgn(u-k)(J_lambda*u - u) phi`,
/// `a = alpha lambda^q`, by midpoint rule in space and trapezoid rule over the
/// snapshot times. Since `J_lambda*k = k` the nonlocal term equals
/// `-a [|u-k| - sgn(u-k) J_lambda*(u-k)]`.
pub fn entropy_residual(traj: &Trajectory, case: &EntropyTestCase, tol_quad: f64) -> Result<Report> {
    Ok(entropy_residuals(traj, std::slice::from_ref(case), tol_quad)?.remove(0))
}

/// [`entropy_residual`] for several cases, sharing one convolution per snapshot.
pub fn entropy_residuals(traj: &Trajectory, cases: &[EntropyTestCase], tol_quad: f64) -> Result<Vec<Report>> {
    let g = *traj.grid();
    let (first, last) = match (traj.snapshots.first(), traj.snapshots.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::Precondition("trajectory has no snapshots".into())),
    };
    let mut ranges = Vec::with_capacity(cases.len());
    for case in cases {
        let t0 = case.t_center - case.t_radius;
        let t1 = case.t_center + case.t_radius;
        if !(t0 > 0.0 && t0 >= first && t1 <= last) {
            return Err(Error::Precondition(format!(
                "test function time support [{t0}, {t1}] outside snapshots [{first}, {last}]"
            )));
        }
        let x0 = case.x_center - case.x_radius;
        let x1 = case.x_center + case.x_radius;
        if !(x0 > g.x_min() && x1 < g.x_max()) {
            return Err(Error::Precondition(format!(
                "test function space support [{x0}, {x1}] outside the domain [{}, {}]",
                g.x_min(),
                g.x_max()
            )));
        }
        let lo = g.cell_of(x0).unwrap_or(0);
        let hi = g.cell_of(x1).map_or(g.len(), |j| j + 1);
        ranges.push((t0, t1, lo, hi));
    }
    let q = traj.params.q;
    let rate = traj.params.nonlocal_rate();
    let conv = if rate > 0.0 {
        Some(Convolver::new(&traj.params.rescaled_kernel()?, g.len(), g.dx())?)
    } else {
        None
    };
    let mut totals = vec![0.0; cases.len()];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for s in &traj.snapshots {
        // the bump vanishes identically outside its time support
        let active: Vec<usize> = (0..cases.len()).filter(|&i| s.t > ranges[i].0 && s.t < ranges[i].1).collect();
        let mut vals = vec![0.0; cases.len()];
        if !active.is_empty() {
            let v = s.u.values();
            let ju = conv.as_ref().map(|c| c.apply(v));
            for i in active {
                let case = &cases[i];
                let (_, _, lo, hi) = ranges[i];
                let k = case.k;
                let fk = flux(k, q);
                let mut acc = 0.0;
                for j in lo..hi {
                    let (phi, phi_t, phi_x) = case.test_function(s.t, g.x(j));
                    if phi == 0.0 && phi_t == 0.0 && phi_x == 0.0 {
                        continue;
                    }
                    let d = v[j] - k;
                    let sg = sgn(d);
                    acc += d.abs() * phi_t + sg * (flux(v[j], q) - fk) * phi_x;
                    if let Some(ju) = &ju {
                        acc += rate * sg * (ju[j] - v[j]) * phi;
                    }
                }
                vals[i] = acc * g.dx();
            }
        }
        if let Some((tp, vp)) = &prev {
            for i in 0..cases.len() {
                totals[i] += 0.5 * (s.t - tp) * (vals[i] + vp[i]);
            }
        }
        prev = Some((s.t, vals));
    }
    Ok(cases
        .iter()
        .zip(totals)
        .map(|(case, total)| {
            let mut r = Report::new(format!("entropy k={} t={} x={}", case.k, case.t_center, case.x_center), tol_quad);
            r.value("residual", total).value("k", case.k);
            r.check(format!("residual {total:.3e} below -{tol_quad:e}"), total >= -tol_quad);
            r
        })
        .collect())
}

/// Closed-form N-wave fields at `times` on `grid`, as a trajectory of the
/// pure conservation law (`alpha = 0`). The initial field is the first snapshot.
pub fn nwave_trajectory(nw: &NWave, grid: &Grid, times: &[f64]) -> Result<Trajectory> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no times given".into()));
    }
    let snapshots = times
        .iter()
        .map(|&t| Ok(Snapshot { t, u: nw.sample(t, grid)? }))
        .collect::<Result<Vec<_>>>()?;
    let params = SimParams {
        q: nw.q,
        alpha: 0.0,
        grid: GridSpec { x_min: grid.x_min(), x_max: grid.x_max(), dx: grid.dx() },
        t_final: *times.last().unwrap(),
        output_times: times.to_vec(),
        ..SimParams::default()
    };
    let mass_history = snapshots.iter().map(|s| (s.t, s.u.mass())).collect();
    Ok(Trajectory {
        params,
        initial: snapshots[0].u.clone(),
        snapshots,
        mass_history,
        leak_history: Vec::new(),
        energy_history: Vec::new(),
        steps: 0,
    })
}

/// A comparison configuration: `z >= 0`, `w` maximal at cell `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCase {
    pub beta: f64,
    pub z: GridFunction,
    pub w: GridFunction,
    pub x0: usize,
    pub a_z_at_x0: f64,
}

/// `A_z(x) = int J(x-y) [z(x) z^b(y) - b/(b+1) z^(b+1)(y) - z^(b+1)(x)/(b+1)] dy`,
/// with `z` extended by zero.
pub fn a_z(kernel: &Kernel, z: &[f64], beta: f64, j: usize) -> f64 {
    let h = kernel.half_cells() as isize;
    let n = z.len() as isize;
    let zx = z[j];
    let c = beta / (beta + 1.0);
    let own = zx.powf(beta + 1.0) / (beta + 1.0);
    let mut acc = 0.0;
    for (s, &wi) in kernel.samples().iter().enumerate() {
        let k = j as isize + s as isize - h;
        let zy = if (0..n).contains(&k) { z[k as usize] } else { 0.0 };
        acc += wi * (zx * zy.powf(beta) - c * zy.powf(beta + 1.0) - own);
    }
    acc * kernel.dx()
}

impl ComparisonCase {
    /// Validates the inputs and places `x0` at the lowest-index maximum of `w`.
    pub fn new(kernel: &Kernel, beta: f64, z: GridFunction, w: GridFunction) -> Result<ComparisonCase> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
        }
        z.check_aligned(&w)?;
        if let Some(j) = z.values().iter().position(|&v| v < 0.0) {
            return Err(Error::Precondition(format!("z is negative at cell {j}")));
        }
        let wmax = w.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let x0 = w.values().iter().position(|&v| v == wmax).unwrap_or(0);
        let a = a_z(kernel, z.values(), beta, x0);
        Ok(ComparisonCase { beta, z, w, x0, a_z_at_x0: a })
    }

    /// All indices attaining the maximum of `w`.
    pub fn argmax_ties(&self) -> Vec<usize> {
        let wmax = self.w.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.w.values().iter().enumerate().filter(|(_, &v)| v == wmax).map(|(j, _)| j).collect()
    }

    /// The same case evaluated at another maximiser.
    pub fn at(&self, kernel: &Kernel, x0: usize) -> ComparisonCase {
        ComparisonCase { x0, a_z_at_x0: a_z(kernel, self.z.values(), self.beta, x0), ..self.clone() }
    }
}

/// Checks `A_z(x0) <= tol` and
/// `z L(z^b w)(x0) - b/(b+1) w L(z^(b+1))(x0) <= A_z(x0) w(x0) + tol`.
pub fn check_nonlocal_comparison(kernel: &Kernel, case: &ComparisonCase, tol: f64) -> Result<Report> {
    let z = case.z.values();
    let w = case.w.values();
    if let Some(j) = z.iter().position(|&v| v < 0.0) {
        return Err(Error::Precondition(format!("z is negative at cell {j}")));
    }
    let j = case.x0;
    let wmax = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if j >= w.len() || w[j] != wmax {
        return Err(Error::Precondition(format!("x0 = {j} is not a maximiser of w")));
    }
    let b = case.beta;
    let zbw: Vec<f64> = z.iter().zip(w).map(|(zi, wi)| zi.powf(b) * wi).collect();
    let zb1: Vec<f64> = z.iter().map(|zi| zi.powf(b + 1.0)).collect();
    let lhs = z[j] * apply_l_at(kernel, &zbw, j, 0.0) - b / (b + 1.0) * w[j] * apply_l_at(kernel, &zb1, j, 0.0);
    let a = a_z(kernel, z, b, j);
    let rhs = a * w[j];
    let mut r = Report::new("nonlocal_comparison", tol);
    r.value("beta", b).value("A_z(x0)", a).value("lhs", lhs).value("rhs", rhs).value("margin", lhs - rhs);
    r.check(format!("A_z(x0) = {a:.3e} > {tol:e}"), a <= tol);
    r.check(format!("lhs {lhs:.6e} > A_z w = {rhs:.6e}"), lhs <= rhs + tol);
    Ok(r)
}

/// `t^((1/q)(1 - 1/p)) ||u - w_M(t)||_p`.
pub fn nwave_distance(u: &GridFunction, nw: &NWave, t: f64, p: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let w = nw.sample(t, u.grid())?;
    let d = u.axpby(1.0, &w, -1.0)?;
    let scale = if p.is_infinite() { t.powf(1.0 / nw.q) } else { t.powf((1.0 - 1.0 / p) / nw.q) };
    Ok(scale * lp_norm(&d, p)?)
}

/// Weakened initial-trace check: `||u(t) - phi||_{L^1(|x| < R)}` must shrink as `t` decreases
/// along the schedule.
pub fn initial_trace(traj: &Trajectory, radius: f64, t_max: f64) -> Result<Report> {
    let mut r = Report::new(format!("initial_trace R={radius}"), 0.0);
    let mut prev = 0.0;
    for s in traj.snapshots.iter().filter(|s| s.t <= t_max) {
        let d = s.u.axpby(1.0, &traj.initial, -1.0)?.map(f64::abs).integral_over(-radius, radius);
        r.value(format!("t={}", s.t), d);
        r.check(format!("distance to the datum shrank from {prev:.3e} to {d:.3e} at t={}", s.t), d >= prev);
        prev = d;
    }
    Ok(r)
}

/// `||u(t2)||^2 + D[t1, t2] <= ||u(t1)||^2 + tol` over every pair of recorded times.
pub fn energy_check(traj: &Trajectory, tol: f64) -> Report {
    let e = &traj.energy_history;
    let mut r = Report::new("energy", tol);
    let mut worst = f64::NEG_INFINITY;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            let excess = b.l2_squared + (b.dissipation - a.dissipation) - a.l2_squared;
            worst = worst.max(excess);
        }
    }
    r.value("max_excess", if e.len() < 2 { 0.0 } else { worst });
    r.check(format!("energy grew by {worst:.3e}"), e.len() < 2 || worst <= tol);
    r
}

/// `|mass(t) - mass(0)|` within the cumulative leak at every record.
pub fn mass_check(traj: &Trajectory) -> Report {
    let m0 = traj.initial_mass();
    let scale = traj.initial.l1().max(1.0);
    let mut r = Report::new("mass", 1e-12);
    for &(t, m) in &traj.mass_history {
        let drift = (m - m0).abs();
        let budget = traj.tail_budget_at(t);
        r.value(format!("drift t={t}"), drift);
        r.check(format!("mass drift {drift:.3e} above budget {budget:.3e} at t={t}"), drift <= budget + 1e-12 * scale);
    }
    r
}

/// L1 and positive-part contraction between two runs, and cellwise order
/// when the data are ordered.
pub fn contraction_check(a: &Trajectory, b: &Trajectory, tol: f64) -> Result<Report> {
    let d0 = b.initial.axpby(1.0, &a.initial, -1.0)?;
    let l1_0 = d0.l1();
    let pos_0 = d0.map(|v| v.max(0.0)).l1();
    let ordered = d0.values().iter().all(|&v| v >= 0.0);
    let scale = a.initial.max_abs().max(b.initial.max_abs()).max(1.0);
    let mut r = Report::new("contraction", tol);
    r.value("l1_initial", l1_0).value("ordered", if ordered { 1.0 } else { 0.0 });
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        let budget = a.tail_budget_at(sa.t) + b.tail_budget_at(sb.t);
        let d = sb.u.axpby(1.0, &sa.u, -1.0)?;
        let l1 = d.l1();
        let pos = d.map(|v| v.max(0.0)).l1();
        r.value(format!("l1 t={}", sa.t), l1);
        r.check(format!("L1 contraction at t={}: {l1:.6e} > {:.6e}", sa.t, l1_0 + budget), l1 <= l1_0 + budget + tol);
        r.check(format!("positive part at t={}: {pos:.6e} > {:.6e}", sa.t, pos_0 + budget), pos <= pos_0 + budget + tol);
        if ordered {
            let worst = d.min();
            r.check(format!("order lost at t={}: min difference {worst:.3e}", sa.t), worst >= -1e-14 * scale);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_kernel, KernelFamily};
    use crate::profiles::{make_initial_datum, InitialDatum};

    fn box_on(g: Grid) -> GridFunction {
        make_initial_datum(&InitialDatum::standard_box(), &g).unwrap()
    }

    #[test]
    fn norms_of_box() {
        let u = box_on(Grid::new(-2.0, 3.0, 0.01).unwrap());
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            assert!((lp_norm(&u, p).unwrap() - 1.0).abs() < 1e-12);
            assert!((lp_norm(&u.map(|v| 2.0 * v), p).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!(lp_norm(&u, 0.5).is_err());
    }

    #[test]
    fn nwave_norm_is_mass() {
        let nw = NWave::new(1.0, 1.5).unwrap();
        let w = nw.sample(1.0, &Grid::new(-1.0, 3.0, 1e-3).unwrap()).unwrap();
        assert!((lp_norm(&w, 1.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oleinik_basics() {
        let g = Grid::new(-1.0, 3.0, 1.0 / 256.0).unwrap();
        let nw = NWave::new(1.0, 1.5).unwrap();
        let w = nw.sample_points(1.0, &g).unwrap();
        let r = oleinik_margin(&w.window(0.05, 1.4).unwrap(), 1.5, 1.0, 0.0).unwrap();
        assert!((r.get("m_t").unwrap() - 1.0).abs() < 1e-10, "{r:?}");
        let c = GridFunction::from_fn(g, |_| 0.3);
        assert_eq!(oleinik_margin(&c, 1.5, 2.0, 0.0).unwrap().get("m_t"), Some(0.0));
        let neg = GridFunction::from_fn(g, |x| x);
        assert!(matches!(oleinik_margin(&neg, 1.5, 1.0, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn tail_and_modulus_examples() {
        let g = Grid::new(-2.0, 3.0, 0.01).unwrap();
        let u = box_on(g);
        assert_eq!(tail_mass(&u, 1.2).unwrap(), 0.0);
        assert!((tail_mass(&u, 0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!(tail_mass(&u, 10.0).is_err());
        assert_eq!(l1_modulus(&u, 0.0).unwrap(), 0.0);
        assert!((l1_modulus(&u, 0.1).unwrap() - 0.2).abs() < 1e-12);
        assert!((l1_modulus(&u, -0.1).unwrap() - 0.2).abs() < 1e-12);
        assert!(l1_modulus(&u, 0.005).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..10).map(|k| (k as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.75 * x).collect();
        assert!((least_squares_slope(&xs, &ys) + 0.75).abs() < 1e-12);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let c = EntropyTestCase { k: 0.0, t_center: 1.0, t_radius: 0.5, x_center: 0.3, x_radius: 0.7 };
        let (t, x, h) = (1.2, 0.1, 1e-6);
        let (_, pt, px) = c.test_function(t, x);
        let nt = (c.test_function(t + h, x).0 - c.test_function(t - h, x).0) / (2.0 * h);
        let nx = (c.test_function(t, x + h).0 - c.test_function(t, x - h).0) / (2.0 * h);
        assert!((pt - nt).abs() < 1e-8 && (px - nx).abs() < 1e-8);
        assert_eq!(c.test_function(2.0, 0.3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn entropy_residual_of_constant_is_zero() {
        let g = Grid::new(-4.0, 4.0, 1.0 / 64.0).unwrap();
        let times: Vec<f64> = (1..=40).map(|k| k as f64 * 0.05).collect();
        let mut traj = nwave_trajectory(&NWave::new(1.0, 1.5).unwrap(), &Grid::new(-1.0, 4.0, 1.0 / 64.0).unwrap(), &times).unwrap();
        let c = GridFunction::from_fn(g, |_| 0.8);
        traj.params.grid = GridSpec { x_min: -4.0, x_max: 4.0, dx: g.dx() };
        traj.params.alpha = 1.0;
        traj.params.kernel.width = 0.5;
        traj.initial = c.clone();
        for s in &mut traj.snapshots {
            s.u = c.clone();
        }
        for k in [0.8, -1.0, 0.3, 2.0] {
            let case = EntropyTestCase { k, t_center: 1.0, t_radius: 0.8, x_center: 0.0, x_radius: 2.0 };
            let r = entropy_residual(&traj, &case, 1e-12).unwrap();
            assert!(r.get("residual").unwrap().abs() < 1e-12, "{r:?}");
        }
        let out = EntropyTestCase { k: 0.0, t_center: 1.0, t_radius: 0.8, x_center: 3.5, x_radius: 1.0 };
        assert!(entropy_residual(&traj, &out, 1e-12).is_err());
    }

    #[test]
    fn comparison_trivial_cases() {
        let g = Grid::new(-3.0, 3.0, 1.0 / 32.0).unwrap();
        let k = make_kernel(KernelFamily::Uniform, 1.0, g.dx()).unwrap();
        let w = GridFunction::from_fn(g, |x| (-x * x).exp() * (1.0 - x * x / 9.0));
        let z = GridFunction::from_fn(g, |_| 1.7);
        let case = ComparisonCase::new(&k, 0.5, z, w.clone()).unwrap();
        assert!(case.a_z_at_x0.abs() < 1e-12);
        assert!(check_nonlocal_comparison(&k, &case, 1e-10).unwrap().passed());
        let z2 = GridFunction::from_fn(g, |x| 1.0 + x.sin().powi(2));
        let case0 = ComparisonCase::new(&k, 0.0, z2, w.clone()).unwrap();
        assert!(case0.a_z_at_x0.abs() < 1e-12);
        assert!(check_nonlocal_comparison(&k, &case0, 1e-10).unwrap().passed());
        let bad = GridFunction::from_fn(g, |x| x);
        assert!(ComparisonCase::new(&k, 1.0, bad, w).is_err());
    }

    #[test]
    fn nwave_distance_examples() {
        let g = Grid::new(-1.0, 3.0, 1e-3).unwrap();
        let nw = NWave::new(1.0, 1.5).unwrap();
        let w = nw.sample(1.0, &g).unwrap();
        assert_eq!(nwave_distance(&w, &nw, 1.0, 1.0).unwrap(), 0.0);
        let z = GridFunction::zeros(g);
        assert!((nwave_distance(&z, &nw, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-10);
        let small = GridFunction::zeros(Grid::new(-1.0, 1.0, 1e-3).unwrap());
        assert!(nwave_distance(&small, &nw, 1.0, 1.0).is_err());
    }

    #[test]
    fn report_text_and_csv() {
        let mut r = Report::new("x", 0.1);
        r.value("a", 1.0).check("a too big", false);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.to_text().contains("verdict=fail"));
        assert_eq!(r.csv_rows()[0][1], "a");
    }
}
