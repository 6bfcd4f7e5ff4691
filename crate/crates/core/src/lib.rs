//! Simulation and verification laboratory for the subcritical
//! convection–nonlocal diffusion equation
//!
//! ```text
//! u_t + |u|^(q-1) u_x = J*u - u,      1 < q < 2,
//! ```
//!
//! together with its rescaled and viscous variants. The crate provides
//! kernels and the nonlocal operator, a monotone explicit solver, the
//! closed-form N-wave, and measurements of the one-sided (Oleinik) bound,
//! decay rates, contraction, Kruzkov entropy residuals and long-time
//! convergence to the N-wave.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod nonlocal;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use kernel::{Kernel, KernelFamily};
pub use profiles::{InitialDatum, NWave};
pub use solver::{SimParams, Trajectory};
