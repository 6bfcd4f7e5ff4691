//! The convective flux `f(u) = |u|^(q-1) u / q` and its upwind discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Exponent of the convective nonlinearity, restricted to `1 < q <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxParams {
    q: f64,
}

impl FluxParams {
    pub fn new(q: f64) -> Result<Self> {
        if q > 1.0 && q <= 2.0 {
            Ok(FluxParams { q })
        } else {
            Err(Error::InvalidParameter(format!("q must satisfy 1 < q <= 2, got {q}")))
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        flux(u, self.q)
    }

    /// `f'(u) = |u|^(q-1)`.
    #[inline]
    pub fn speed(&self, u: f64) -> f64 {
        u.abs().powf(self.q - 1.0)
    }
}

/// `f(u) = |u|^(q-1) u / q`; odd, with `f'(u) = |u|^(q-1) >= 0`.
#[inline]
pub fn flux(u: f64, q: f64) -> f64 {
    u.abs().powf(q - 1.0) * u / q
}

/// Godunov flux at an interface with left state `ul` and right state `ur`.
///
/// Since `f` is nondecreasing everywhere, the Godunov min/max formula always
/// selects the left state: the exact Riemann flux is `f(ul)`.
#[inline]
pub fn numerical_flux(ul: f64, _ur: f64, q: f64) -> f64 {
    flux(ul, q)
}

/// `max_j |u_j|^(q-1)`.
pub fn max_wave_speed(u: &GridFunction, q: f64) -> f64 {
    u.max_abs().powf(q - 1.0)
}
