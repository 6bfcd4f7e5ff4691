//! Nonnegative, even, unit-mass convolution kernels on a uniform grid.
//!
//! A kernel is stored as its cell averages on the offsets `i*dx`,
//! `i = -h..=h`, renormalized so that `sum(J_i) dx = 1` holds to rounding.
//! Three compactly supported families are provided; all of them have a
//! finite second moment, so they belong to `L^1(1 + |x|^2)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Kernels with at most this many samples are convolved by direct summation.
pub const DIRECT_MAX_CELLS: usize = 64;

/// Minimum resolution: the support radius must span this many cells.
const MIN_CELLS_PER_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `1/(2a)` on `[-a, a]`.
    Uniform,
    /// `(a - |x|)/a^2` on `[-a, a]`.
    Triangle,
    /// Gaussian with `sigma = a/4`, cut at `|x| = a` and renormalized.
    TruncatedGaussian,
}

impl KernelFamily {
    /// Unnormalized cumulative mass of the continuous density with support radius `a`.
    fn cdf(self, x: f64, a: f64) -> f64 {
        let x = x.clamp(-a, a);
        match self {
            KernelFamily::Uniform => (x + a) / (2.0 * a),
            KernelFamily::Triangle => {
                if x <= 0.0 {
                    (x + a) * (x + a) / (2.0 * a * a)
                } else {
                    1.0 - (a - x) * (a - x) / (2.0 * a * a)
                }
            }
            KernelFamily::TruncatedGaussian => {
                let sigma = a / 4.0;
                0.5 * (1.0 + libm::erf(x / (sigma * std::f64::consts::SQRT_2)))
            }
        }
    }

    /// Continuous density (before truncation renormalization for the Gaussian).
    pub fn density(self, x: f64, a: f64) -> f64 {
        if x.abs() > a {
            return 0.0;
        }
        match self {
            KernelFamily::Uniform => 0.5 / a,
            KernelFamily::Triangle => (a - x.abs()) / (a * a),
            KernelFamily::TruncatedGaussian => {
                let sigma = a / 4.0;
                (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Uniform => "uniform",
            KernelFamily::Triangle => "triangle",
            KernelFamily::TruncatedGaussian => "truncated_gaussian",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelFamily::Uniform),
            "triangle" => Ok(KernelFamily::Triangle),
            "truncated_gaussian" => Ok(KernelFamily::TruncatedGaussian),
            other => Err(Error::InvalidParameter(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// A discretized kernel `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    width: f64,
    dx: f64,
    /// `samples[h + i]` is the value at offset `i*dx`.
    samples: Vec<f64>,
    m0: f64,
    m2: f64,
}

impl Kernel {
    /// Samples `family` with support radius `width` on spacing `dx`.
    pub fn new(family: KernelFamily, width: f64, dx: f64) -> Result<Kernel> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel width must be positive, got {width}")));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel dx must be positive, got {dx}")));
        }
        let half = (width / dx - 0.5).ceil().max(0.0) as usize;
        if width / dx < MIN_CELLS_PER_RADIUS * (1.0 - 1e-9) {
            return Err(Error::UnresolvedKernel { cells: 2 * half + 1 });
        }

        // Cell averages of the continuous density, built on the nonnegative
        // offsets and mirrored so that symmetry is exact.
        let mut right = Vec::with_capacity(half + 1);
        for i in 0..=half {
            let s = i as f64 * dx;
            let mass = family.cdf(s + 0.5 * dx, width) - family.cdf(s - 0.5 * dx, width);
            right.push((mass / dx).max(0.0));
        }
        let mut samples = Vec::with_capacity(2 * half + 1);
        samples.extend(right.iter().rev());
        samples.extend(right.iter().skip(1));

        let raw_mass: f64 = samples.iter().sum::<f64>() * dx;
        for v in &mut samples {
            *v /= raw_mass;
        }
        let mut kernel = Kernel { family, width, dx, samples, m0: 0.0, m2: 0.0 };
        kernel.m0 = kernel.samples.iter().sum::<f64>() * dx;
        kernel.m2 = kernel.offsets().map(|(x, j)| x * x * j).sum::<f64>() * dx;
        Ok(kernel)
    }

    /// `J_lambda(x) = lambda J(lambda x)`, resampled on the same spacing.
    pub fn rescale(&self, lambda: f64) -> Result<Kernel> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        let mut k = Kernel::new(self.family, self.width / lambda, self.dx)?;
        k.match_second_moment(self.m2 / (lambda * lambda));
        Ok(k)
    }

    /// Moves an O(dx^2) fraction of the mass to the center (or to the two
    /// outermost samples) so that the discrete second moment equals `target`
    /// while mass, symmetry and nonnegativity are kept.
    fn match_second_moment(&mut self, target: f64) {
        let h = self.half_cells();
        let dx = self.dx;
        let current = self.m2;
        if current > target {
            let eps = 1.0 - target / current;
            for v in &mut self.samples {
                *v *= 1.0 - eps;
            }
            self.samples[h] += eps / dx;
        } else if current < target {
            let edge = h as f64 * dx;
            let eps = (target - current) / (edge * edge - current);
            for v in &mut self.samples {
                *v *= 1.0 - eps;
            }
            let last = self.samples.len() - 1;
            self.samples[0] += 0.5 * eps / dx;
            self.samples[last] += 0.5 * eps / dx;
        }
        self.m0 = self.samples.iter().sum::<f64>() * dx;
        self.m2 = self.offsets().map(|(x, j)| x * x * j).sum::<f64>() * dx;
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Continuous support radius.
    pub fn support_radius(&self) -> f64 {
        self.width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of cells on each side of the center.
    pub fn half_cells(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// `(offset, value)` pairs from `-h*dx` to `h*dx`.
    pub fn offsets(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.half_cells() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k as f64 - h) * self.dx, v))
    }

    /// Writes `x,J` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "J"]).map_err(|e| Error::Io(e.to_string()))?;
        for (x, v) in self.offsets() {
            w.write_record([x.to_string(), v.to_string()]).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds a kernel of the given family; see [`Kernel::new`].
pub fn make_kernel(family: KernelFamily, width: f64, dx: f64) -> Result<Kernel> {
    Kernel::new(family, width, dx)
}

/// See [`Kernel::rescale`].
pub fn rescale(kernel: &Kernel, lambda: f64) -> Result<Kernel> {
    kernel.rescale(lambda)
}

/// `(J*u)_j = sum_k J(x_j - x_k) u_k dx`, with `u` extended by zero.
pub fn convolve(kernel: &Kernel, u: &GridFunction) -> Result<GridFunction> {
    let conv = Convolver::new(kernel, u.len(), u.dx())?;
    GridFunction::from_values(*u.grid(), conv.apply(u.values()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Direct,
    Fft,
}

/// Precomputed convolution of fields of a fixed length against one kernel.
pub struct Convolver {
    weights: Vec<f64>,
    half: usize,
    n: usize,
    fft: Option<FftPlan>,
}

struct FftPlan {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl Convolver {
    /// Chooses the direct sum for small stencils and the FFT otherwise.
    pub fn new(kernel: &Kernel, n: usize, dx: f64) -> Result<Convolver> {
        let backend = if kernel.samples.len() <= DIRECT_MAX_CELLS { Backend::Direct } else { Backend::Fft };
        Convolver::with_backend(kernel, n, dx, backend)
    }

    pub fn with_backend(kernel: &Kernel, n: usize, dx: f64, backend: Backend) -> Result<Convolver> {
        if (kernel.dx - dx).abs() > 1e-12 * kernel.dx.max(dx) {
            return Err(Error::SpacingMismatch { left: kernel.dx, right: dx });
        }
        let weights: Vec<f64> = kernel.samples.iter().map(|v| v * kernel.dx).collect();
        let half = kernel.half_cells();
        let fft = match backend {
            Backend::Direct => None,
            Backend::Fft => {
                let size = (n + 2 * half).next_power_of_two();
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(size);
                let inverse = planner.plan_fft_inverse(size);
                let mut spectrum = vec![Complex::new(0.0, 0.0); size];
                for (s, w) in weights.iter().enumerate() {
                    spectrum[s].re = *w;
                }
                forward.process(&mut spectrum);
                let scale = 1.0 / size as f64;
                for c in &mut spectrum {
                    *c *= scale;
                }
                Some(FftPlan { size, forward, inverse, spectrum })
            }
        };
        Ok(Convolver { weights, half, n, fft })
    }

    pub fn backend(&self) -> Backend {
        if self.fft.is_some() {
            Backend::Fft
        } else {
            Backend::Direct
        }
    }

    pub fn half_cells(&self) -> usize {
        self.half
    }

    /// Full linear convolution, length `n + 2h`; entry `m` belongs to cell `m - h`
    /// (so the first and last `h` entries lie outside the domain).
    pub fn apply_full(&self, u: &[f64], out: &mut Vec<f64>) {
        assert_eq!(u.len(), self.n, "field length does not match the convolver");
        let len = self.n + 2 * self.half;
        out.clear();
        out.resize(len, 0.0);
        match &self.fft {
            None => {
                for (k, &uk) in u.iter().enumerate() {
                    if uk == 0.0 {
                        continue;
                    }
                    for (s, w) in self.weights.iter().enumerate() {
                        out[k + s] += w * uk;
                    }
                }
            }
            Some(plan) => {
                let mut buf = vec![Complex::new(0.0, 0.0); plan.size];
                for (b, &v) in buf.iter_mut().zip(u) {
                    b.re = v;
                }
                plan.forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&plan.spectrum) {
                    *b *= s;
                }
                plan.inverse.process(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
                // The exact convolution of a nonnegative field with a
                // nonnegative kernel is nonnegative; transform roundoff is not.
                if u.iter().all(|&v| v >= 0.0) {
                    for o in out.iter_mut() {
                        if *o < 0.0 {
                            *o = 0.0;
                        }
                    }
                }
            }
        }
    }

    /// Convolution restricted to the domain cells.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut full = Vec::new();
        self.apply_full(u, &mut full);
        full.drain(..self.half);
        full.truncate(self.n);
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn uniform_width_one_has_unit_mass_and_third_second_moment() {
        let k = make_kernel(KernelFamily::Uniform, 1.0, 1.0 / 256.0).unwrap();
        assert!((k.m0() - 1.0).abs() < 1e-12);
        // cell averages with half-weight end cells: m2 = 1/3 + dx^2/6
        assert!((k.m2() - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn triangle_is_normalized() {
        let k = make_kernel(KernelFamily::Triangle, 1.0, 0.01).unwrap();
        assert!((k.m0() - 1.0).abs() < 1e-12);
        assert!((k.m2() - 1.0 / 6.0).abs() < 1e-4);
    }

    #[test]
    fn samples_are_even_and_nonnegative() {
        for fam in [KernelFamily::Uniform, KernelFamily::Triangle, KernelFamily::TruncatedGaussian] {
            let k = make_kernel(fam, 0.7, 0.013).unwrap();
            let s = k.samples();
            assert!(s.iter().all(|&v| v >= 0.0));
            for i in 0..s.len() {
                assert_eq!(s[i], s[s.len() - 1 - i]);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_kernel(KernelFamily::Uniform, 0.0, 0.1).is_err());
        assert!(make_kernel(KernelFamily::Uniform, 1.0, -0.1).is_err());
        assert!(matches!(
            make_kernel(KernelFamily::Uniform, 1.0, 0.3),
            Err(Error::UnresolvedKernel { .. })
        ));
        assert!(make_kernel(KernelFamily::Uniform, 1.0, 0.25).is_ok());
    }

    #[test]
    fn rescale_identity_and_moments() {
        let k = make_kernel(KernelFamily::Uniform, 1.0, 1.0 / 512.0).unwrap();
        assert_eq!(k.rescale(1.0).unwrap(), k);
        let k2 = k.rescale(2.0).unwrap();
        assert!((k2.m0() - 1.0).abs() < 1e-12);
        assert!((k2.m2() - k.m2() / 4.0).abs() < 1e-15);
        assert!((k2.m2() - 1.0 / 12.0).abs() < 1e-5);
        let kt = make_kernel(KernelFamily::TruncatedGaussian, 1.0, 1.0 / 512.0).unwrap();
        for lambda in [1.5, 3.0, 7.0, 20.0] {
            let r = kt.rescale(lambda).unwrap();
            assert!((r.m2() - kt.m2() / (lambda * lambda)).abs() < 1e-15);
            assert!(r.samples().iter().all(|&v| v >= 0.0));
        }
        let k10 = k.rescale(10.0).unwrap();
        assert!((k10.support_radius() - 0.1).abs() < 1e-15);
        assert!(matches!(k.rescale(200.0), Err(Error::UnresolvedKernel { .. })));
    }

    #[test]
    fn convolve_constant_is_constant_in_interior() {
        let dx = 0.05;
        let k = make_kernel(KernelFamily::Triangle, 1.0, dx).unwrap();
        let g = Grid::new(-5.0, 5.0, dx).unwrap();
        let u = GridFunction::from_fn(g, |_| 3.0);
        let c = convolve(&k, &u).unwrap();
        let h = k.half_cells();
        for j in h..g.len() - h {
            assert!((c.values()[j] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_delta_reproduces_kernel() {
        let dx = 0.1;
        let k = make_kernel(KernelFamily::Triangle, 1.0, dx).unwrap();
        let g = Grid::new(-3.0, 3.0, dx).unwrap();
        let mut u = GridFunction::zeros(g);
        let mid = g.len() / 2;
        u.values_mut()[mid] = 1.0 / dx;
        let c = convolve(&k, &u).unwrap();
        let h = k.half_cells();
        for (i, &s) in k.samples().iter().enumerate() {
            assert!((c.values()[mid - h + i] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn spacing_mismatch_is_an_error() {
        let k = make_kernel(KernelFamily::Uniform, 1.0, 0.1).unwrap();
        let g = Grid::new(0.0, 1.0, 0.05).unwrap();
        let u = GridFunction::zeros(g);
        assert!(matches!(convolve(&k, &u), Err(Error::SpacingMismatch { .. })));
    }

    #[test]
    fn backends_agree() {
        let dx = 1.0 / 64.0;
        let k = make_kernel(KernelFamily::TruncatedGaussian, 0.4, dx).unwrap();
        let g = Grid::new(-4.0, 4.0, dx).unwrap();
        let u = GridFunction::from_fn(g, |x| (3.0 * x).sin() * (-x * x).exp() + 0.2);
        let a = Convolver::with_backend(&k, g.len(), dx, Backend::Direct).unwrap().apply(u.values());
        let b = Convolver::with_backend(&k, g.len(), dx, Backend::Fft).unwrap().apply(u.values());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn family_round_trips_through_strings() {
        for fam in [KernelFamily::Uniform, KernelFamily::Triangle, KernelFamily::TruncatedGaussian] {
            assert_eq!(fam.to_string().parse::<KernelFamily>().unwrap(), fam);
        }
        assert!("cauchy".parse::<KernelFamily>().is_err());
    }
}
