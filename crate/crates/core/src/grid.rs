//! Uniform 1-D cell grids and the fields living on them.

use crate::error::{Error, Result};

/// Relative tolerance used when comparing grid spacings.
const SPACING_RTOL: f64 = 1e-12;

/// Geometry of a uniform grid: `n` cells of width `dx` covering `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    dx: f64,
    n: usize,
}

impl Grid {
    /// Builds the grid covering `[x_min, x_max]`; the cell count is
    /// `round((x_max - x_min) / dx)` and the width must be a whole number of cells.
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "empty domain [{x_min}, {x_max}]"
            )));
        }
        let cells = (x_max - x_min) / dx;
        let n = cells.round();
        if n < 1.0 || (cells - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "domain length {} is not a whole number of cells of width {dx}",
                x_max - x_min
            )));
        }
        Ok(Grid { x_min, dx, n: n as usize })
    }

    /// Grid of `n` cells starting at `x_min`.
    pub fn with_cells(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || n == 0 {
            return Err(Error::InvalidParameter("grid needs dx > 0 and n > 0".into()));
        }
        Ok(Grid { x_min, dx, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.n as f64 * self.dx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Center of cell `j`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    /// Left edge of cell `j`.
    #[inline]
    pub fn left_edge(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Index of the cell containing `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.x_min) / self.dx;
        if s < 0.0 || s >= self.n as f64 {
            None
        } else {
            Some(s.floor() as usize)
        }
    }

    pub fn same_spacing(&self, dx: f64) -> bool {
        (self.dx - dx).abs() <= SPACING_RTOL * self.dx.max(dx)
    }

    /// Two grids are aligned when they share spacing and cell boundaries.
    pub fn aligned_with(&self, other: &Grid) -> bool {
        self.same_spacing(other.dx)
            && self.n == other.n
            && (self.x_min - other.x_min).abs() <= 1e-9 * self.dx
    }
}

/// A real field on a uniform grid, one value per cell, extended by zero
/// outside `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at cell {j}")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Discrete integral `sum(u) dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.dx()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// `a*self + b*other` on the same grid.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.check_aligned(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn check_aligned(&self, other: &GridFunction) -> Result<()> {
        if !self.grid.same_spacing(other.grid.dx()) {
            return Err(Error::SpacingMismatch { left: self.dx(), right: other.dx() });
        }
        if !self.grid.aligned_with(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// The cells `range` as a field on the corresponding sub-grid.
    pub fn cells(&self, range: std::ops::Range<usize>) -> Result<GridFunction> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidParameter(format!("cell range {range:?} outside 0..{}", self.len())));
        }
        let grid = Grid::with_cells(self.grid.left_edge(range.start), self.dx(), range.len())?;
        Ok(GridFunction { grid, values: self.values[range].to_vec() })
    }

    /// Cells whose centers lie in `[x_lo, x_hi]`.
    pub fn window(&self, x_lo: f64, x_hi: f64) -> Result<GridFunction> {
        let g = &self.grid;
        let lo = ((x_lo - g.x_min()) / g.dx() - 0.5).ceil().max(0.0) as usize;
        let hi = (((x_hi - g.x_min()) / g.dx() - 0.5).floor() + 1.0).clamp(0.0, g.len() as f64) as usize;
        self.cells(lo..hi.max(lo))
    }

    /// Value at `x` under the piecewise-constant cell reconstruction.
    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.cell_of(x).map_or(0.0, |j| self.values[j])
    }

    /// Integral of the piecewise-constant reconstruction over `[a, b]`.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let g = &self.grid;
        let lo = ((a - g.x_min()) / g.dx()).floor().max(0.0) as usize;
        let hi = (((b - g.x_min()) / g.dx()).ceil().max(0.0) as usize).min(g.len());
        let mut acc = 0.0;
        for j in lo..hi {
            let l = g.left_edge(j).max(a);
            let r = (g.left_edge(j) + g.dx()).min(b);
            if r > l {
                acc += self.values[j] * (r - l);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_selects_centers() {
        let g = Grid::new(0.0, 1.0, 0.125).unwrap();
        let u = GridFunction::from_fn(g, |x| x);
        let w = u.window(0.2, 0.7).unwrap();
        assert_eq!(w.values(), &[0.3125, 0.4375, 0.5625, 0.6875]);
        assert_eq!(w.grid().x_min(), 0.25);
        assert!(u.window(0.9, 0.1).is_err());
    }

    #[test]
    fn cell_count_is_rounded_width() {
        let g = Grid::new(-1.0, 1.0, 0.25).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.x(0) + 0.875).abs() < 1e-15);
        assert!((g.x_max() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_ragged_domain() {
        assert!(Grid::new(0.0, 1.0, 0.3).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0).is_err());
        assert!(Grid::new(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = Grid::new(0.0, 1.0, 0.5).unwrap();
        assert!(GridFunction::from_values(g, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn integral_over_partial_cells() {
        let g = Grid::new(0.0, 1.0, 0.25).unwrap();
        let u = GridFunction::from_values(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((u.integral_over(0.125, 0.375) - (0.125 + 0.25)).abs() < 1e-15);
        assert!((u.integral_over(-5.0, 5.0) - 2.5).abs() < 1e-15);
    }
}
