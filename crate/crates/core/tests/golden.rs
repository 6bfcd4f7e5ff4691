//! Reference values recomputed by independent oracles in this file, plus the
//! frozen numbers those oracles produced.

use nwave::kernel::{convolve, Kernel, KernelFamily};
use nwave::nonlocal::{second_order_bound_ratio, Norm};
use nwave::profiles::make_initial_datum;
use nwave::{Grid, GridFunction, InitialDatum};

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Cell averages of `family`'s density by quadrature, normalized to unit mass.
fn oracle_kernel(family: KernelFamily, width: f64, dx: f64) -> Vec<f64> {
    let h = (width / dx - 0.5).ceil() as i64;
    let raw: Vec<f64> = (-h..=h)
        .map(|i| {
            let c = i as f64 * dx;
            let (a, b) = ((c - 0.5 * dx).max(-width), (c + 0.5 * dx).min(width));
            if b <= a {
                0.0
            } else {
                simpson(|x| family.density(x, width), a, b, 64) / dx
            }
        })
        .collect();
    let mass: f64 = raw.iter().sum::<f64>() * dx;
    raw.into_iter().map(|v| v / mass).collect()
}

fn oracle_m2(samples: &[f64], dx: f64) -> f64 {
    let h = (samples.len() / 2) as f64;
    samples.iter().enumerate().map(|(k, v)| (k as f64 - h).powi(2) * dx * dx * v).sum::<f64>() * dx
}

const TRUNCATED_GAUSSIAN_M2: f64 = 0.24975268942140097;
const TRIANGLE_M2: f64 = 0.16667175292968750;
const GAUSSIAN_PSI_RATIO_INF: f64 = 0.15487765713963719;
const GAUSSIAN_PSI_RATIO_L1: f64 = 0.15871812000036792;

#[test]
fn kernel_samples_match_quadrature() {
    for (family, width, dx, frozen) in [
        (KernelFamily::TruncatedGaussian, 2.0, 1.0 / 64.0, TRUNCATED_GAUSSIAN_M2),
        (KernelFamily::Triangle, 1.0, 1.0 / 128.0, TRIANGLE_M2),
    ] {
        let k = Kernel::new(family, width, dx).unwrap();
        let oracle = oracle_kernel(family, width, dx);
        assert_eq!(k.samples().len(), oracle.len());
        for (a, b) in k.samples().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "{family}: {a} vs {b}");
        }
        let m2 = oracle_m2(&oracle, dx);
        assert!((k.m2() - m2).abs() < 1e-12, "{family}: m2 {} vs oracle {m2}", k.m2());
        assert!((k.m2() - frozen).abs() < 1e-12, "{family}: m2 {:.17} drifted from {frozen}", k.m2());
    }
}

#[test]
fn uniform_kernel_second_moment_closed_form() {
    // cell averages of 1/2 on [-1, 1] with dx = 1/64: every interior cell is 1/2,
    // the two end cells are half covered
    let dx = 1.0 / 64.0;
    let k = Kernel::new(KernelFamily::Uniform, 1.0, dx).unwrap();
    let h = 64i64;
    let mut m2 = 0.0;
    let mut mass = 0.0;
    for i in -h..=h {
        let w = if i.abs() == h { 0.25 } else { 0.5 };
        mass += w * dx;
        m2 += w * (i as f64 * dx).powi(2) * dx;
    }
    assert!((mass - 1.0).abs() < 1e-15);
    assert!((k.m2() - m2).abs() < 1e-14);
    assert!((k.m2() - (1.0 / 3.0 + dx * dx / 6.0)).abs() < 1e-14);
}

/// Direct evaluation of `lambda^2 (J_lambda*psi - psi)` against `psi_xx`, one cell at a time.
fn oracle_ratio(kernel: &Kernel, psi: &[f64], dx: f64, lambda: f64, p: f64) -> f64 {
    let scaled = kernel.rescale(lambda).unwrap();
    let w = scaled.samples();
    let h = w.len() / 2;
    let n = psi.len();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for j in h.max(1)..n - h.max(1) {
        let conv: f64 = (0..w.len()).map(|k| w[k] * psi[j + k - h] * dx).sum();
        num.push(lambda * lambda * (conv - psi[j]));
        den.push((psi[j + 1] - 2.0 * psi[j] + psi[j - 1]) / (dx * dx));
    }
    let norm = |v: &[f64]| {
        if p.is_infinite() {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p) * dx.powf(1.0 / p)
        }
    };
    norm(&num) / norm(&den)
}

#[test]
fn gaussian_psi_bound_ratio() {
    let dx = 1.0 / 256.0;
    let g = Grid::new(-6.0, 6.0, dx).unwrap();
    let psi = GridFunction::from_fn(g, |x| (-x * x).exp());
    let k = Kernel::new(KernelFamily::Uniform, 1.0, dx).unwrap();
    for (p, norm, frozen) in [(f64::INFINITY, Norm::Inf, GAUSSIAN_PSI_RATIO_INF), (1.0, Norm::L1, GAUSSIAN_PSI_RATIO_L1)] {
        let lib = second_order_bound_ratio(&k, &psi, 2.0, norm).unwrap();
        let oracle = oracle_ratio(&k, psi.values(), dx, 2.0, p);
        assert!((lib - oracle).abs() < 1e-12, "p={p}: {lib} vs {oracle}");
        assert!((lib - frozen).abs() < 1e-12, "p={p}: {lib:.17} drifted from {frozen}");
        assert!(lib <= k.m2());
    }
}

#[test]
fn gaussian_datum_cell_averages() {
    let g = Grid::new(-3.0, 3.0, 1.0 / 32.0).unwrap();
    let (mass, center, sigma) = (2.0, 0.3, 0.4);
    let u = make_initial_datum(&InitialDatum::Gaussian { mass, center, sigma }, &g).unwrap();
    let density = |x: f64| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
    let raw: Vec<f64> = (0..g.len()).map(|j| simpson(density, g.left_edge(j), g.left_edge(j) + g.dx(), 64) / g.dx()).collect();
    let total: f64 = raw.iter().sum::<f64>() * g.dx();
    for (a, r) in u.values().iter().zip(&raw) {
        assert!((a - mass * r / total).abs() < 1e-12);
    }
    assert!((u.mass() - mass).abs() < 1e-13);
}

#[test]
fn convolution_of_box_by_hand() {
    // uniform kernel of radius 1 on dx = 1/4: weights 1/16, 1/8 x7, 1/16
    let g = Grid::new(-3.0, 3.0, 0.25).unwrap();
    let k = Kernel::new(KernelFamily::Uniform, 1.0, 0.25).unwrap();
    let mut v = vec![0.0; g.len()];
    v[12] = 4.0;
    let u = GridFunction::from_values(g, v).unwrap();
    let c = convolve(&k, &u).unwrap();
    let expected: Vec<f64> = (0..g.len())
        .map(|j| match (j as i64 - 12).abs() {
            4 => 4.0 * 0.5 * 0.25 * 0.5,
            d if d < 4 => 4.0 * 0.5 * 0.25,
            _ => 0.0,
        })
        .collect();
    for (a, b) in c.values().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
}
