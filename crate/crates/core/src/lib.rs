//! Galerkin simulation of the stochastic hydrostatic Euler and hydrostatic
//! Navier-Stokes equations on the unit torus, in analytic (Gevrey) spaces,
//! together with numerical checks of the estimates those equations rely on.
//!
//! Layout:
//!
//! * [`spectral`] fields in the even-in-`z` Fourier basis, transforms,
//!   projections and the diagnostic vertical velocity;
//! * [`gevrey`] the operators `A`, `A_h`, `A_z`, the exponential weights and
//!   the analytic norms;
//! * [`dynamics`] the nonlinearity, cutoff, drift and radius schedules;
//! * [`stochastic`] noise models, time stepping and single trajectories;
//! * [`verify`] sampled inequality checks, energy budgets, uniqueness and
//!   convergence experiments and the suite runner;
//! * [`config`] and [`ensemble`] for the command line front end.

pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod gevrey;
pub mod output;
mod par;
pub mod spectral;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};
