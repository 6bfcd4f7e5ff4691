//! The nonlocal operators `alpha (J*u - u)` and `lambda^q (J_lambda*u - u)`,
//! and the measured constant of the second-order bound
//! `||lambda^2 (J_lambda*psi - psi)||_p <= C(J, p) ||psi_xx||_p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{Backend, Convolver, Kernel};

/// Norm selector for the bound ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl Norm {
    pub fn exponent(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Inf => f64::INFINITY,
        }
    }

    fn of(self, values: impl Iterator<Item = f64>, dx: f64) -> f64 {
        match self {
            Norm::L1 => values.map(f64::abs).sum::<f64>() * dx,
            Norm::L2 => (values.map(|v| v * v).sum::<f64>() * dx).sqrt(),
            Norm::Inf => values.fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// `J*u - u`. Small stencils are summed in difference form, which keeps the
/// result accurate when `u` is large and the difference small.
fn conv_minus_identity(kernel: &Kernel, u: &GridFunction) -> Result<Vec<f64>> {
    let conv = Convolver::new(kernel, u.len(), u.dx())?;
    let vals = u.values();
    match conv.backend() {
        Backend::Fft => Ok(conv.apply(vals).iter().zip(vals).map(|(c, v)| c - v).collect()),
        Backend::Direct => {
            let h = kernel.half_cells() as isize;
            let w: Vec<f64> = kernel.samples().iter().map(|s| s * kernel.dx()).collect();
            let n = vals.len() as isize;
            Ok((0..n)
                .map(|j| {
                    let uj = vals[j as usize];
                    let mut acc = 0.0;
                    for (s, wi) in w.iter().enumerate() {
                        let k = j + s as isize - h;
                        let uk = if (0..n).contains(&k) { vals[k as usize] } else { 0.0 };
                        acc += wi * (uk - uj);
                    }
                    acc
                })
                .collect())
        }
    }
}

/// `alpha (J*u - u)`.
pub fn apply_l(kernel: &Kernel, u: &GridFunction, alpha: f64) -> Result<GridFunction> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    let d = conv_minus_identity(kernel, u)?;
    GridFunction::from_values(*u.grid(), d.into_iter().map(|v| alpha * v).collect())
}

/// `lambda^q (J_lambda*u - u)`. The rescaled kernel must stay resolved on the grid.
pub fn apply_rescaled_l(kernel: &Kernel, u: &GridFunction, lambda: f64, q: f64) -> Result<GridFunction> {
    if lambda < 1.0 {
        log::warn!("rescaled operator evaluated with lambda = {lambda} < 1");
    }
    let scaled = kernel.rescale(lambda)?;
    apply_l(&scaled, u, lambda.powf(q))
}

/// `(J*u - u)` at the single cell `j`, with `u` extended by `outside`.
pub fn apply_l_at(kernel: &Kernel, u: &[f64], j: usize, outside: f64) -> f64 {
    let h = kernel.half_cells() as isize;
    let n = u.len() as isize;
    let uj = u[j];
    let mut acc = 0.0;
    for (s, &wi) in kernel.samples().iter().enumerate() {
        let k = j as isize + s as isize - h;
        let uk = if (0..n).contains(&k) { u[k as usize] } else { outside };
        acc += wi * (uk - uj);
    }
    acc * kernel.dx()
}

/// Centered second difference; zero in the two boundary cells.
pub fn second_difference(u: &GridFunction) -> Vec<f64> {
    let v = u.values();
    let dx2 = u.dx() * u.dx();
    let mut out = vec![0.0; v.len()];
    for j in 1..v.len().saturating_sub(1) {
        out[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / dx2;
    }
    out
}

/// `||lambda^2 (J_lambda*psi - psi)||_p / ||psi_xx||_p`, both norms taken over
/// the cells whose whole `J_lambda` stencil lies inside the domain.
pub fn second_order_bound_ratio(kernel: &Kernel, psi: &GridFunction, lambda: f64, p: Norm) -> Result<f64> {
    let scaled = kernel.rescale(lambda)?;
    let h = scaled.half_cells().max(1);
    let n = psi.len();
    if n <= 2 * h {
        return Err(Error::Precondition("domain narrower than the rescaled kernel stencil".into()));
    }
    let diff = conv_minus_identity(&scaled, psi)?;
    let dxx = second_difference(psi);
    let window = h..n - h;
    let lam2 = lambda * lambda;
    let num = p.of(diff[window.clone()].iter().map(|d| lam2 * d), psi.dx());
    let den = p.of(dxx[window].iter().copied(), psi.dx());
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Degenerate("psi_xx vanishes but the nonlocal difference does not".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::{make_kernel, KernelFamily};

    fn dyadic_grid() -> Grid {
        Grid::new(-2.0, 2.0, 1.0 / 1024.0).unwrap()
    }

    #[test]
    fn constant_and_zero_alpha() {
        let g = Grid::new(-4.0, 4.0, 1.0 / 32.0).unwrap();
        let k = make_kernel(KernelFamily::Uniform, 1.0, g.dx()).unwrap();
        let u = GridFunction::from_fn(g, |_| 2.5);
        let l = apply_l(&k, &u, 1.0).unwrap();
        let h = k.half_cells();
        assert!(l.values()[h..g.len() - h].iter().all(|v| v.abs() < 1e-12));
        let w = GridFunction::from_fn(g, |x| x.sin());
        assert!(apply_l(&k, &w, 0.0).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_gives_second_moment() {
        let g = dyadic_grid();
        let k = make_kernel(KernelFamily::Uniform, 0.25, g.dx()).unwrap();
        let u = GridFunction::from_fn(g, |x| x * x);
        let l = apply_l(&k, &u, 1.0).unwrap();
        let h = k.half_cells();
        for v in &l.values()[h..g.len() - h] {
            assert!((v - k.m2()).abs() < 1e-12);
        }
        let r = apply_rescaled_l(&k, &u, 2.0, 1.5).unwrap();
        let expect = 2f64.powf(1.5) * k.m2() / 4.0;
        for v in &r.values()[h..g.len() - h] {
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_one_matches_plain_operator() {
        let g = Grid::new(-3.0, 3.0, 1.0 / 64.0).unwrap();
        let k = make_kernel(KernelFamily::Triangle, 0.5, g.dx()).unwrap();
        let u = GridFunction::from_fn(g, |x| (-x * x).exp());
        assert_eq!(apply_rescaled_l(&k, &u, 1.0, 1.7).unwrap(), apply_l(&k, &u, 1.0).unwrap());
    }

    #[test]
    fn rescaled_operator_rejects_unresolved_kernel() {
        let g = Grid::new(-3.0, 3.0, 1.0 / 16.0).unwrap();
        let k = make_kernel(KernelFamily::Uniform, 1.0, g.dx()).unwrap();
        let u = GridFunction::from_fn(g, |x| (-x * x).exp());
        assert!(matches!(
            apply_rescaled_l(&k, &u, 8.0, 1.5),
            Err(Error::UnresolvedKernel { .. })
        ));
    }

    #[test]
    fn quadratic_ratio_is_half_second_moment() {
        let g = dyadic_grid();
        let k = make_kernel(KernelFamily::Uniform, 0.5, g.dx()).unwrap();
        let psi = GridFunction::from_fn(g, |x| x * x);
        for lambda in [1.0, 2.0, 8.0, 32.0] {
            let r = second_order_bound_ratio(&k, &psi, lambda, Norm::Inf).unwrap();
            assert!((r - k.m2() / 2.0).abs() < 1e-10, "lambda {lambda}: {r}");
        }
    }

    #[test]
    fn degenerate_ratio() {
        let g = Grid::new(-2.0, 2.0, 1.0 / 64.0).unwrap();
        let k = make_kernel(KernelFamily::Uniform, 0.25, g.dx()).unwrap();
        // affine psi: both sides vanish on the window
        let affine = GridFunction::from_fn(g, |x| 3.0 * x - 1.0);
        assert_eq!(second_order_bound_ratio(&k, &affine, 1.0, Norm::L1).unwrap(), 0.0);
        // a spike in the first cell is seen by the stencil of the first window
        // cell but by no second difference inside the window
        let mut v = vec![0.0; g.len()];
        v[0] = 1.0;
        let spike = GridFunction::from_values(g, v).unwrap();
        assert!(matches!(second_order_bound_ratio(&k, &spike, 1.0, Norm::Inf), Err(Error::Degenerate(_))));
        let kink = GridFunction::from_fn(g, |x| x.abs());
        let r = second_order_bound_ratio(&k, &kink, 1.0, Norm::Inf).unwrap();
        assert!(r > 0.0 && r < k.m2(), "{r}");
    }
}
