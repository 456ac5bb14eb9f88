use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gevrey::{Family, GevreyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Hydrostatic Euler, isotropic radius shrinking in all directions.
    Inviscid,
    /// Vertical viscosity: the horizontal radius shrinks, the vertical one
    /// grows from zero.
    Viscous,
}

impl Mode {
    pub fn family(self) -> Family {
        match self {
            Mode::Inviscid => Family::Isotropic,
            Mode::Viscous => Family::Anisotropic,
        }
    }
}

/// Affine radii `tau(t) = tau0 (1 - t / (2T))` and `gamma(t) = gamma_rate t`
/// on `[0, T]`.
///
/// Written this way `tau(T) = tau0 / 2` holds exactly in floating point,
/// and the slope is `-tau0 / (2T) = -C (rho + 1)` (inviscid) or
/// `-C (rho^2 + 1)` (viscous).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub mode: Mode,
    pub tau0: f64,
    pub t_max: f64,
    pub gamma_rate: f64,
}

/// Relative slack allowed past `t_max` before a time counts as outside the
/// schedule; absorbs rounding in `n * dt`.
const HORIZON_SLACK: f64 = 1e-12;

pub fn radius_schedule(mode: Mode, tau0: f64, rho: f64, c_cal: f64, nu_z: f64) -> Result<RadiusSchedule> {
    for (name, v) in [("tau0", tau0), ("rho", rho), ("C_cal", c_cal)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")));
        }
    }
    let (growth, gamma_rate) = match mode {
        Mode::Inviscid => (rho + 1.0, 0.0),
        Mode::Viscous => (rho * rho + 1.0, nu_z / 8.0),
    };
    Ok(RadiusSchedule {
        mode,
        tau0,
        t_max: tau0 / (2.0 * c_cal * growth),
        gamma_rate,
    })
}

impl RadiusSchedule {
    pub fn check(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.t_max * (1.0 + HORIZON_SLACK) {
            return Err(Error::Horizon { t, t_max: self.t_max });
        }
        Ok(())
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.tau0 * (1.0 - t / (2.0 * self.t_max))
    }

    pub fn gamma(&self, t: f64) -> f64 {
        self.gamma_rate * t
    }

    /// `d tau / dt`
    pub fn tau_rate(&self) -> f64 {
        -self.tau0 / (2.0 * self.t_max)
    }

    /// Norm parameters at time `t` with vertical exponent equal to `r`.
    pub fn params(&self, t: f64, r: f64) -> GevreyParams {
        match self.mode {
            Mode::Inviscid => GevreyParams::isotropic(self.tau(t), r),
            Mode::Viscous => GevreyParams::anisotropic(self.tau(t), r, self.gamma(t)),
        }
    }
}
