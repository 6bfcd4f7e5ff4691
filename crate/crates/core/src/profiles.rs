//! Closed-form N-waves and the initial data used by the experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// The entropy solution of `w_t + (|w|^(q-1) w / q)_x = 0` with initial
/// datum `M delta_0`:
///
/// ```text
/// w_M(t, x) = (x/t)^(1/(q-1))   for 0 < x < r(t),  0 otherwise,
/// r(t) = (q/(q-1))^((q-1)/q) M^((q-1)/q) t^(1/q).
/// ```
///
/// For `M < 0` the profile is `-w_|M|(t, x)`; the flux is odd, so the sign
/// flip maps entropy solutions to entropy solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NWave {
    pub mass: f64,
    pub q: f64,
}

impl NWave {
    pub fn new(mass: f64, q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("N-wave needs q > 1, got {q}")));
        }
        if !mass.is_finite() {
            return Err(Error::InvalidParameter("N-wave mass must be finite".into()));
        }
        Ok(NWave { mass, q })
    }

    fn exponent(&self) -> f64 {
        1.0 / (self.q - 1.0)
    }

    /// Right end of the support.
    pub fn front(&self, t: f64) -> f64 {
        let q = self.q;
        (q / (q - 1.0)).powf((q - 1.0) / q) * self.mass.abs().powf((q - 1.0) / q) * t.powf(1.0 / q)
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("N-wave evaluated at t = {t}")));
        }
        Ok(self.eval_unchecked(t, x))
    }

    fn eval_unchecked(&self, t: f64, x: f64) -> f64 {
        if self.mass == 0.0 || x <= 0.0 || x >= self.front(t) {
            return 0.0;
        }
        self.mass.signum() * (x / t).powf(self.exponent())
    }

    /// `sup |w_M(t)| = (r(t)/t)^(1/(q-1))`.
    pub fn sup(&self, t: f64) -> f64 {
        if self.mass == 0.0 {
            return 0.0;
        }
        (self.front(t) / t).powf(self.exponent())
    }

    /// `int_{-inf}^x w_M(t, s) ds`.
    pub fn antiderivative(&self, t: f64, x: f64) -> f64 {
        if self.mass == 0.0 || x <= 0.0 {
            return 0.0;
        }
        let p = self.exponent();
        let x = x.min(self.front(t));
        self.mass.signum() * x.powf(p + 1.0) / ((p + 1.0) * t.powf(p))
    }

    /// Exact cell averages on `grid`. The grid must contain `[0, r(t)]`.
    pub fn sample(&self, t: f64, grid: &Grid) -> Result<GridFunction> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("N-wave sampled at t = {t}")));
        }
        if grid.x_min() > 0.0 || grid.x_max() < self.front(t) {
            return Err(Error::Precondition(format!(
                "grid [{}, {}] does not cover the N-wave support [0, {}]",
                grid.x_min(),
                grid.x_max(),
                self.front(t)
            )));
        }
        let dx = grid.dx();
        let values = (0..grid.len())
            .map(|j| {
                let a = grid.left_edge(j);
                (self.antiderivative(t, a + dx) - self.antiderivative(t, a)) / dx
            })
            .collect();
        GridFunction::from_values(*grid, values)
    }

    /// Point values at the cell centers.
    pub fn sample_points(&self, t: f64, grid: &Grid) -> Result<GridFunction> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("N-wave sampled at t = {t}")));
        }
        Ok(GridFunction::from_fn(*grid, |x| self.eval_unchecked(t, x)))
    }
}

/// See [`NWave::eval`].
pub fn nwave_eval(nw: &NWave, t: f64, x: f64) -> Result<f64> {
    nw.eval(t, x)
}

/// See [`NWave::sample`].
pub fn nwave_sample(nw: &NWave, t: f64, grid: &Grid) -> Result<GridFunction> {
    nw.sample(t, grid)
}

/// Initial data, sampled as exact cell averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `height` on `[left, right]`.
    Box { height: f64, left: f64, right: f64 },
    /// Gaussian of the given mass, renormalized on the grid.
    Gaussian { mass: f64, center: f64, sigma: f64 },
    /// `pos_height` on `[pos_left, pos_right]` plus `neg_height` on `[neg_left, neg_right]`.
    TwoBoxesSigned {
        pos_height: f64,
        pos_left: f64,
        pos_right: f64,
        neg_height: f64,
        neg_left: f64,
        neg_right: f64,
    },
    /// `+height` on `[0, half_width]`, `-height` on `[-half_width, 0]`; zero mass.
    DipoleZeroMass { height: f64, half_width: f64 },
}

impl InitialDatum {
    /// Unit box on `[0, 1]`.
    pub fn standard_box() -> Self {
        InitialDatum::Box { height: 1.0, left: 0.0, right: 1.0 }
    }

    /// `+2` on `[0, 1]` and `-1` on `[-2, -1]`: mass 1, L1 norm 3.
    pub fn standard_two_boxes() -> Self {
        InitialDatum::TwoBoxesSigned {
            pos_height: 2.0,
            pos_left: 0.0,
            pos_right: 1.0,
            neg_height: -1.0,
            neg_left: -2.0,
            neg_right: -1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialDatum::Box { .. } => "box",
            InitialDatum::Gaussian { .. } => "gaussian",
            InitialDatum::TwoBoxesSigned { .. } => "two_boxes_signed",
            InitialDatum::DipoleZeroMass { .. } => "dipole_zero_mass",
        }
    }

    /// Total mass of the continuous datum.
    pub fn mass(&self) -> f64 {
        match *self {
            InitialDatum::Box { height, left, right } => height * (right - left),
            InitialDatum::Gaussian { mass, .. } => mass,
            InitialDatum::TwoBoxesSigned { pos_height, pos_left, pos_right, neg_height, neg_left, neg_right } => {
                pos_height * (pos_right - pos_left) + neg_height * (neg_right - neg_left)
            }
            InitialDatum::DipoleZeroMass { .. } => 0.0,
        }
    }

    /// L1 norm of the continuous datum (boxes assumed disjoint).
    pub fn l1(&self) -> f64 {
        match *self {
            InitialDatum::Box { height, left, right } => height.abs() * (right - left),
            InitialDatum::Gaussian { mass, .. } => mass.abs(),
            InitialDatum::TwoBoxesSigned { pos_height, pos_left, pos_right, neg_height, neg_left, neg_right } => {
                pos_height.abs() * (pos_right - pos_left) + neg_height.abs() * (neg_right - neg_left)
            }
            InitialDatum::DipoleZeroMass { height, half_width } => 2.0 * height.abs() * half_width,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            InitialDatum::Box { height, .. } => height >= 0.0,
            InitialDatum::Gaussian { mass, .. } => mass >= 0.0,
            InitialDatum::TwoBoxesSigned { pos_height, neg_height, .. } => pos_height >= 0.0 && neg_height >= 0.0,
            InitialDatum::DipoleZeroMass { height, .. } => height == 0.0,
        }
    }

    /// Bounds of the region where the datum is nonzero (Gaussians: `center ± 6 sigma`).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            InitialDatum::Box { left, right, .. } => (left, right),
            InitialDatum::Gaussian { center, sigma, .. } => (center - 6.0 * sigma, center + 6.0 * sigma),
            InitialDatum::TwoBoxesSigned { pos_left, pos_right, neg_left, neg_right, .. } => {
                (pos_left.min(neg_left), pos_right.max(neg_right))
            }
            InitialDatum::DipoleZeroMass { half_width, .. } => (-half_width, half_width),
        }
    }

    /// `phi_lambda(x) = lambda phi(lambda x)`.
    pub fn rescaled(&self, lambda: f64) -> InitialDatum {
        match *self {
            InitialDatum::Box { height, left, right } => {
                InitialDatum::Box { height: lambda * height, left: left / lambda, right: right / lambda }
            }
            InitialDatum::Gaussian { mass, center, sigma } => {
                InitialDatum::Gaussian { mass, center: center / lambda, sigma: sigma / lambda }
            }
            InitialDatum::TwoBoxesSigned { pos_height, pos_left, pos_right, neg_height, neg_left, neg_right } => {
                InitialDatum::TwoBoxesSigned {
                    pos_height: lambda * pos_height,
                    pos_left: pos_left / lambda,
                    pos_right: pos_right / lambda,
                    neg_height: lambda * neg_height,
                    neg_left: neg_left / lambda,
                    neg_right: neg_right / lambda,
                }
            }
            InitialDatum::DipoleZeroMass { height, half_width } => {
                InitialDatum::DipoleZeroMass { height: lambda * height, half_width: half_width / lambda }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("degenerate {}: {what}", self.name())));
        match *self {
            InitialDatum::Box { left, right, height } => {
                if !(right > left) {
                    return bad("zero width");
                }
                if !height.is_finite() {
                    return bad("non-finite height");
                }
            }
            InitialDatum::Gaussian { sigma, mass, .. } => {
                if !(sigma > 0.0) {
                    return bad("zero width");
                }
                if !mass.is_finite() {
                    return bad("non-finite mass");
                }
            }
            InitialDatum::TwoBoxesSigned { pos_left, pos_right, neg_left, neg_right, .. } => {
                if !(pos_right > pos_left) || !(neg_right > neg_left) {
                    return bad("zero width");
                }
                if pos_left < neg_right && neg_left < pos_right {
                    return bad("overlapping boxes");
                }
            }
            InitialDatum::DipoleZeroMass { half_width, .. } => {
                if !(half_width > 0.0) {
                    return bad("zero width");
                }
            }
        }
        Ok(())
    }
}

fn box_average(grid: &Grid, j: usize, height: f64, left: f64, right: f64) -> f64 {
    let a = grid.left_edge(j);
    let b = a + grid.dx();
    let overlap = (b.min(right) - a.max(left)).max(0.0);
    height * overlap / grid.dx()
}

/// Samples `datum` on `grid` as exact cell averages.
pub fn make_initial_datum(datum: &InitialDatum, grid: &Grid) -> Result<GridFunction> {
    datum.validate()?;
    let values: Vec<f64> = match *datum {
        InitialDatum::Box { height, left, right } => {
            (0..grid.len()).map(|j| box_average(grid, j, height, left, right)).collect()
        }
        InitialDatum::Gaussian { mass, center, sigma } => {
            let cdf = |x: f64| 0.5 * (1.0 + libm::erf((x - center) / (sigma * std::f64::consts::SQRT_2)));
            let raw: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let a = grid.left_edge(j);
                    (cdf(a + grid.dx()) - cdf(a)) / grid.dx()
                })
                .collect();
            let total: f64 = raw.iter().sum::<f64>() * grid.dx();
            if !(total > 0.0) {
                return Err(Error::Precondition("gaussian lies outside the grid".into()));
            }
            raw.into_iter().map(|v| mass * v / total).collect()
        }
        InitialDatum::TwoBoxesSigned { pos_height, pos_left, pos_right, neg_height, neg_left, neg_right } => (0
            ..grid.len())
            .map(|j| {
                box_average(grid, j, pos_height, pos_left, pos_right)
                    + box_average(grid, j, neg_height, neg_left, neg_right)
            })
            .collect(),
        InitialDatum::DipoleZeroMass { height, half_width } => (0..grid.len())
            .map(|j| box_average(grid, j, height, 0.0, half_width) + box_average(grid, j, -height, -half_width, 0.0))
            .collect(),
    };
    GridFunction::from_values(*grid, values)
}
