//! Explicit monotone time stepping for
//!
//! ```text
//! u_t + (|u|^(q-1) u / q)_x = alpha lambda^q (J_lambda*u - u) + mu u_xx
//! ```
//!
//! on a truncated domain with zero ghost values. One forward-Euler step is
//!
//! ```text
//! u'_j = u_j - dt/dx (f(u_j) - f(u_{j-1})) + dt a (J_lambda*u - u)_j
//!        + dt mu (u_{j+1} - 2 u_j + u_{j-1}) / dx^2,        a = alpha lambda^q,
//! ```
//!
//! which is monotone as long as `dt (max|u|^(q-1)/dx + a + 2 mu/dx^2) <= 1`.
//! Whatever the update pushes into the ghost region is discarded and booked
//! as leaked mass; the cumulative L1 leak is the run's tail budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxParams;
use crate::grid::{Grid, GridFunction};
use crate::kernel::{Convolver, Kernel, KernelFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub width: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { family: KernelFamily::Uniform, width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.dx)
    }
}

/// Parameters of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub q: f64,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub kernel: KernelSpec,
    pub grid: GridSpec,
    pub t_final: f64,
    pub cfl: f64,
    /// Snapshot times, strictly increasing, in `(0, t_final]`.
    pub output_times: Vec<f64>,
    /// Abort once the cumulative L1 leak exceeds `tail_cap * ||phi||_1`.
    pub tail_cap: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            q: 1.5,
            lambda: 1.0,
            mu: 0.0,
            alpha: 1.0,
            kernel: KernelSpec::default(),
            grid: GridSpec { x_min: -20.0, x_max: 30.0, dx: 1.0 / 256.0 },
            t_final: 1.0,
            cfl: 0.9,
            output_times: vec![1.0],
            tail_cap: 1e-3,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.q > 1.0 && self.q <= 2.0) {
            return bad(format!("q = {} violates 1 < q <= 2", self.q));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda = {} must be positive", self.lambda));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return bad(format!("mu = {} must be nonnegative", self.mu));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha = {} must be nonnegative", self.alpha));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl = {} must lie in (0, 1)", self.cfl));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        if !(self.tail_cap > 0.0) {
            return bad(format!("tail_cap = {} must be positive", self.tail_cap));
        }
        let mut prev = 0.0;
        for &t in &self.output_times {
            if !(t > prev) {
                return bad(format!("output times must be strictly increasing and positive, got {t} after {prev}"));
            }
            prev = t;
        }
        if prev > self.t_final * (1.0 + 1e-12) {
            return bad(format!("output time {prev} beyond t_final = {}", self.t_final));
        }
        self.grid.build()?;
        self.rescaled_kernel()?;
        Ok(())
    }

    /// `alpha lambda^q`.
    pub fn nonlocal_rate(&self) -> f64 {
        self.alpha * self.lambda.powf(self.q)
    }

    pub fn base_kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel.family, self.kernel.width, self.grid.dx)
    }

    /// `J_lambda` on the simulation grid.
    pub fn rescaled_kernel(&self) -> Result<Kernel> {
        self.base_kernel()?.rescale(self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridFunction,
}

/// `||u||_2^2` and the cumulative nonlocal dissipation
/// `alpha lambda^q int_0^t int int J_lambda(x-y) (u(x)-u(y))^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub l2_squared: f64,
    pub dissipation: f64,
}

/// Output of a run. Histories are recorded at `t = 0` and at every snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: SimParams,
    pub initial: GridFunction,
    pub snapshots: Vec<Snapshot>,
    pub mass_history: Vec<(f64, f64)>,
    /// Cumulative L1 mass pushed out of the domain.
    pub leak_history: Vec<(f64, f64)>,
    pub energy_history: Vec<EnergyRecord>,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&GridFunction> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|s| &s.u)
    }

    pub fn initial_mass(&self) -> f64 {
        self.initial.mass()
    }

    /// Total L1 leak up to the last recorded time.
    pub fn tail_budget(&self) -> f64 {
        self.leak_history.last().map_or(0.0, |&(_, l)| l)
    }

    pub fn tail_budget_at(&self, t: f64) -> f64 {
        self.leak_history
            .iter()
            .take_while(|(s, _)| *s <= t * (1.0 + 1e-12))
            .last()
            .map_or(0.0, |&(_, l)| l)
    }

    pub fn grid(&self) -> &Grid {
        self.initial.grid()
    }
}

/// Mass leaving the domain during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Leak {
    pub signed: f64,
    pub l1: f64,
}

/// Reusable state of the explicit scheme on one grid.
pub struct Stepper {
    flux: FluxParams,
    conv: Option<Convolver>,
    rate: f64,
    mu: f64,
    dx: f64,
    n: usize,
    half: usize,
    /// `J_lambda * u` for the current state, full length `n + 2 half`.
    conv_full: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper {
    pub fn new(params: &SimParams, n: usize) -> Result<Stepper> {
        let flux = FluxParams::new(params.q)?;
        let rate = params.nonlocal_rate();
        let (conv, half) = if rate > 0.0 {
            let kernel = params.rescaled_kernel()?;
            let c = Convolver::new(&kernel, n, params.grid.dx)?;
            let h = c.half_cells();
            (Some(c), h)
        } else {
            (None, 0)
        };
        Ok(Stepper {
            flux,
            conv,
            rate,
            mu: params.mu,
            dx: params.grid.dx,
            n,
            half,
            conv_full: vec![0.0; n + 2 * half],
            next: vec![0.0; n],
        })
    }

    /// Recomputes the convolution for the state `u`; must precede [`Stepper::advance`].
    pub fn prepare(&mut self, u: &[f64]) {
        if let Some(c) = &self.conv {
            c.apply_full(u, &mut self.conv_full);
        }
    }

    /// `sum_{j,k} J_lambda(x_j - x_k) (u_j - u_k)^2 dx^2` for the prepared state,
    /// with `u` extended by zero.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        if self.conv.is_none() {
            return 0.0;
        }
        let h = self.half;
        let mut acc = 0.0;
        for (j, &uj) in u.iter().enumerate() {
            acc += uj * (uj - self.conv_full[j + h]);
        }
        2.0 * acc * self.dx
    }

    /// Largest step inside the monotonicity budget scaled by `cfl`,
    /// with the index of the fastest cell.
    pub fn stable_dt(&self, u: &[f64], cfl: f64) -> (f64, usize) {
        let (cell, umax) = u
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(k, m), (j, v)| if v.abs() > m { (j, v.abs()) } else { (k, m) });
        let speed = self.flux.speed(umax);
        let mut budget = speed / self.dx + self.rate;
        if self.mu > 0.0 {
            budget += 2.0 * self.mu / (self.dx * self.dx);
        }
        if budget == 0.0 {
            (f64::INFINITY, cell)
        } else {
            (cfl / budget, cell)
        }
    }

    /// One forward-Euler step of length `dt` from the prepared state `u`.
    pub fn advance(&mut self, u: &mut Vec<f64>, dt: f64, t: f64) -> Result<Leak> {
        let n = self.n;
        let h = self.half;
        let dx = self.dx;
        let q = self.flux.q();
        let courant = dt / dx;
        let nl = dt * self.rate;
        let nu = if self.mu > 0.0 { dt * self.mu / (dx * dx) } else { 0.0 };
        let has_conv = self.conv.is_some();

        let mut left_flux = 0.0; // f(u_{j-1}); the left ghost is zero
        for j in 0..n {
            let uj = u[j];
            let ul = if j > 0 { u[j - 1] } else { 0.0 };
            let ur = if j + 1 < n { u[j + 1] } else { 0.0 };
            let coef = 1.0 - nl - 2.0 * nu - courant * uj.abs().powf(q - 1.0) / q;
            let mut v = uj * coef + courant * left_flux;
            if has_conv {
                v += nl * self.conv_full[j + h];
            }
            if nu > 0.0 {
                v += nu * (ul + ur);
            }
            if !v.is_finite() {
                return Err(Error::NumericalAbort { time: t, cell: j, reason: "non-finite value".into() });
            }
            self.next[j] = v;
            left_flux = self.flux.f(uj);
        }

        // ghost cells
        let mut leak = Leak::default();
        let mut book = |g: f64| {
            leak.signed += g * dx;
            leak.l1 += g.abs() * dx;
        };
        let ghost_conv = |m: usize| if has_conv { nl * self.conv_full[m] } else { 0.0 };
        for m in 0..h.saturating_sub(1) {
            book(ghost_conv(m));
        }
        let left_ghost = if h > 0 { ghost_conv(h - 1) } else { 0.0 } + nu * u[0];
        book(left_ghost);
        let right_ghost = if has_conv { ghost_conv(n + h) } else { 0.0 } + courant * left_flux + nu * u[n - 1];
        book(right_ghost);
        for m in n + h + 1..n + 2 * h {
            book(ghost_conv(m));
        }

        std::mem::swap(u, &mut self.next);
        Ok(leak)
    }
}

/// One step of length `dt`; `dt` must respect the budget `<= cfl`.
pub fn step(u: &GridFunction, params: &SimParams, dt: f64) -> Result<GridFunction> {
    let mut stepper = Stepper::new(params, u.len())?;
    let (dt_max, _) = stepper.stable_dt(u.values(), params.cfl);
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("dt = {dt} exceeds the monotonicity budget {dt_max}")));
    }
    let mut vals = u.values().to_vec();
    stepper.prepare(&vals);
    stepper.advance(&mut vals, dt, 0.0)?;
    GridFunction::from_values(*u.grid(), vals)
}

/// Integrates from `phi` to `params.t_final`, recording the output schedule.
pub fn run(phi: &GridFunction, params: &SimParams) -> Result<Trajectory> {
    Ok(run_ensemble(std::slice::from_ref(phi), params)?.remove(0))
}

struct Member {
    stepper: Stepper,
    u: Vec<f64>,
    leaked: f64,
    cap: f64,
    dissipation: f64,
    traj: Trajectory,
}

/// Evolves several data in lockstep with a common time step (the smallest
/// stable step over the members), so that the discrete order and contraction
/// properties of the scheme hold between them exactly.
pub fn run_ensemble(phis: &[GridFunction], params: &SimParams) -> Result<Vec<Trajectory>> {
    params.validate()?;
    let grid = params.grid.build()?;
    let rate = params.nonlocal_rate();
    let dt_min = 1e-12 * params.t_final;
    let dx = grid.dx();
    let l2sq = |u: &[f64]| u.iter().map(|v| v * v).sum::<f64>() * dx;

    let mut members = Vec::with_capacity(phis.len());
    for phi in phis {
        if !phi.grid().aligned_with(&grid) {
            return Err(Error::GridMismatch("initial datum is not sampled on the configured grid".into()));
        }
        let u = phi.values().to_vec();
        let mut stepper = Stepper::new(params, grid.len())?;
        stepper.prepare(&u);
        let traj = Trajectory {
            params: params.clone(),
            initial: phi.clone(),
            snapshots: Vec::with_capacity(params.output_times.len()),
            mass_history: vec![(0.0, phi.mass())],
            leak_history: vec![(0.0, 0.0)],
            energy_history: vec![EnergyRecord { t: 0.0, l2_squared: l2sq(&u), dissipation: 0.0 }],
            steps: 0,
        };
        let cap = params.tail_cap * phi.l1().max(f64::MIN_POSITIVE);
        members.push(Member { stepper, u, leaked: 0.0, cap, dissipation: 0.0, traj });
    }

    let mut t = 0.0;
    let mut schedule = params.output_times.iter().copied().peekable();
    let t_end = params.t_final;
    while t < t_end && !members.is_empty() {
        let (dt_stable, fastest) = members
            .iter()
            .map(|m| m.stepper.stable_dt(&m.u, params.cfl))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
        if dt_stable < dt_min {
            return Err(Error::NumericalAbort {
                time: t,
                cell: fastest,
                reason: format!("time step collapsed to {dt_stable:.3e} < {dt_min:.3e}"),
            });
        }
        let target = schedule.peek().copied().unwrap_or(t_end).min(t_end);
        let mut dt = dt_stable;
        let mut hit = false;
        if t + dt >= target * (1.0 - 1e-14) {
            dt = target - t;
            hit = true;
        }
        let t_next = if hit { target } else { t + dt };
        let record = hit && schedule.peek().is_some_and(|&s| s == target);
        for m in &mut members {
            let leak = m.stepper.advance(&mut m.u, dt, t)?;
            m.traj.steps += 1;
            m.leaked += leak.l1;
            if m.leaked > m.cap {
                return Err(Error::TailBudget { time: t_next, leaked: m.leaked, cap: m.cap });
            }
            m.stepper.prepare(&m.u);
            if rate > 0.0 {
                m.dissipation += dt * rate * m.stepper.dirichlet_form(&m.u);
            }
            if record {
                let snap = GridFunction::from_values(grid, m.u.clone())?;
                m.traj.mass_history.push((t_next, snap.mass()));
                m.traj.leak_history.push((t_next, m.leaked));
                m.traj.energy_history.push(EnergyRecord { t: t_next, l2_squared: l2sq(&m.u), dissipation: m.dissipation });
                m.traj.snapshots.push(Snapshot { t: t_next, u: snap });
            }
        }
        if record {
            schedule.next();
        }
        t = t_next;
    }
    Ok(members.into_iter().map(|m| m.traj).collect())
}

/// `lambda u(lambda^q t, lambda x)` at `times`, remapped conservatively onto `grid`.
///
/// Each source time `lambda^q t` must coincide with a snapshot or be bracketed
/// by two (linear interpolation in time).
pub fn rescale_trajectory(traj: &Trajectory, lambda: f64, times: &[f64], grid: &Grid) -> Result<Trajectory> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let q = traj.params.q;
    let remap = |src: &GridFunction| -> Result<GridFunction> {
        let dy = grid.dx();
        let vals = (0..grid.len())
            .map(|j| {
                let a = grid.left_edge(j);
                src.integral_over(lambda * a, lambda * (a + dy)) / dy
            })
            .collect();
        GridFunction::from_values(*grid, vals)
    };
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in times {
        let ts = lambda.powf(q) * t;
        let src = source_at(traj, ts)?;
        snapshots.push(Snapshot { t, u: remap(&src)? });
    }
    let initial = remap(&traj.initial)?;
    let mut params = traj.params.clone();
    params.lambda *= lambda;
    params.grid = GridSpec { x_min: grid.x_min(), x_max: grid.x_max(), dx: grid.dx() };
    params.output_times = times.to_vec();
    params.t_final = times.last().copied().unwrap_or(params.t_final / lambda.powf(q));
    let mut mass_history = vec![(0.0, initial.mass())];
    mass_history.extend(snapshots.iter().map(|s| (s.t, s.u.mass())));
    Ok(Trajectory {
        params,
        initial,
        snapshots,
        mass_history,
        leak_history: Vec::new(),
        energy_history: Vec::new(),
        steps: 0,
    })
}

fn source_at(traj: &Trajectory, ts: f64) -> Result<GridFunction> {
    let tol = 1e-9 * ts.max(1.0);
    if let Some(s) = traj.snapshots.iter().find(|s| (s.t - ts).abs() <= tol) {
        return Ok(s.u.clone());
    }
    let pos = traj.snapshots.iter().position(|s| s.t > ts);
    match pos {
        Some(k) if k > 0 => {
            let (a, b) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
            let w = (ts - a.t) / (b.t - a.t);
            a.u.axpby(1.0 - w, &b.u, w)
        }
        _ => Err(Error::Precondition(format!("time {ts} is not bracketed by the trajectory's snapshots"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::flux;
    use crate::profiles::{make_initial_datum, InitialDatum};

    fn params(x_min: f64, x_max: f64, dx: f64) -> SimParams {
        SimParams {
            grid: GridSpec { x_min, x_max, dx },
            kernel: KernelSpec { family: KernelFamily::Uniform, width: 0.25 },
            ..SimParams::default()
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let p = params(-2.0, 2.0, 1.0 / 32.0);
        let g = p.grid.build().unwrap();
        let z = GridFunction::zeros(g);
        assert_eq!(step(&z, &p, 0.01).unwrap(), z);
    }

    #[test]
    fn constant_stays_constant_in_interior() {
        let p = params(-2.0, 2.0, 1.0 / 32.0);
        let g = p.grid.build().unwrap();
        let c = GridFunction::from_fn(g, |_| 0.7);
        let out = step(&c, &p, 0.005).unwrap();
        let h = p.rescaled_kernel().unwrap().half_cells();
        for v in &out.values()[h + 1..g.len() - h - 1] {
            assert!((v - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn riemann_single_step_by_hand() {
        let mut p = params(-1.0, 1.0, 0.125);
        p.alpha = 0.0;
        p.mu = 0.0;
        let g = p.grid.build().unwrap();
        let u = GridFunction::from_fn(g, |x| if x < 0.0 { 1.0 } else { 0.0 });
        let dt = 0.5 * g.dx();
        let out = step(&u, &p, dt).unwrap();
        // independent scalar evaluation of the update formula
        let lam = dt / g.dx();
        let upd = |ul: f64, uj: f64| uj - lam * (flux(uj, 1.5) - flux(ul, 1.5));
        let k = g.cell_of(-0.01).unwrap();
        assert!((out.values()[k] - upd(1.0, 1.0)).abs() < 1e-15);
        assert!((out.values()[k] - 1.0).abs() < 1e-15);
        assert!((out.values()[k + 1] - upd(1.0, 0.0)).abs() < 1e-15);
        assert!((out.values()[k + 1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(out.values()[k + 2], 0.0);
    }

    #[test]
    fn step_rejects_oversized_dt() {
        let p = params(-1.0, 1.0, 0.125);
        let g = p.grid.build().unwrap();
        let u = GridFunction::from_fn(g, |_| 1.0);
        assert!(step(&u, &p, 1.0).is_err());
    }

    #[test]
    fn zero_datum_gives_zero_trajectory() {
        let mut p = params(-2.0, 2.0, 1.0 / 32.0);
        p.output_times = vec![0.5, 1.0];
        let g = p.grid.build().unwrap();
        let traj = run(&GridFunction::zeros(g), &p).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
        assert!(traj.snapshots.iter().all(|s| s.u.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn schedule_is_hit_exactly() {
        let mut p = params(-3.0, 5.0, 1.0 / 32.0);
        p.output_times = vec![0.1, 0.25, 0.7, 1.0];
        let g = p.grid.build().unwrap();
        let phi = make_initial_datum(&InitialDatum::standard_box(), &g).unwrap();
        let traj = run(&phi, &p).unwrap();
        assert_eq!(traj.times(), p.output_times);
        for (t, m) in &traj.mass_history {
            let budget = traj.tail_budget_at(*t);
            assert!((m - 1.0).abs() <= budget + 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let p = params(-2.0, 2.0, 1.0 / 32.0);
        let other = Grid::new(-2.0, 2.0, 1.0 / 16.0).unwrap();
        assert!(matches!(run(&GridFunction::zeros(other), &p), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn huge_datum_collapses_dt() {
        let mut p = params(-2.0, 2.0, 1.0 / 32.0);
        p.cfl = 0.999;
        let g = p.grid.build().unwrap();
        let phi = GridFunction::from_fn(g, |x| if x.abs() < 0.5 { 1e40 } else { 0.0 });
        match run(&phi, &p) {
            Err(Error::NumericalAbort { time, cell, .. }) => {
                assert_eq!(time, 0.0);
                assert!(g.x(cell).abs() < 0.5);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn narrow_domain_exceeds_tail_budget() {
        let mut p = params(-0.5, 1.5, 1.0 / 32.0);
        p.t_final = 2.0;
        p.output_times = vec![2.0];
        p.tail_cap = 1e-6;
        let g = p.grid.build().unwrap();
        let phi = make_initial_datum(&InitialDatum::standard_box(), &g).unwrap();
        assert!(matches!(run(&phi, &p), Err(Error::TailBudget { .. })));
    }

    #[test]
    fn rescale_identity_and_mass() {
        let mut p = params(-3.0, 5.0, 1.0 / 32.0);
        p.output_times = vec![0.5, 1.0];
        let g = p.grid.build().unwrap();
        let phi = make_initial_datum(&InitialDatum::standard_box(), &g).unwrap();
        let traj = run(&phi, &p).unwrap();
        let same = rescale_trajectory(&traj, 1.0, &[1.0], &g).unwrap();
        assert_eq!(same.snapshots[0].u, traj.snapshots[1].u);
        let lam = 2f64.powf(1.0 / 1.5); // lambda^q = 2
        let target = Grid::new(-1.5, 2.5, 1.0 / 64.0).unwrap();
        let r = rescale_trajectory(&traj, lam, &[0.5], &target).unwrap();
        assert!((r.snapshots[0].u.mass() - traj.snapshots[1].u.mass()).abs() < 1e-8);
        assert!(rescale_trajectory(&traj, 4.0, &[1.0], &target).is_err());
    }
}
