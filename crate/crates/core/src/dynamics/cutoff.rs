use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth cutoff `theta_rho`: 1 on `[0, rho/2]`, 0 on `[rho, inf)`.
///
/// The transition is `S((rho - x) / (rho / 2))` with the partition of unity
/// `S(u) = h(u) / (h(u) + h(1 - u))`, `h(u) = exp(-1/u)` for `u > 0` and `0`
/// otherwise, which is smooth and non-increasing in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub rho: f64,
}

impl CutoffSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff radius rho = {rho} must be > 0")));
        }
        Ok(Self { rho })
    }

    pub fn theta(&self, x: f64) -> f64 {
        smooth_step((self.rho - x.abs()) / (0.5 * self.rho))
    }
}

fn h(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = h(u);
        a / (a + h(1.0 - u))
    }
}

pub fn cutoff_theta(x: f64, spec: &CutoffSpec) -> Result<f64> {
    if !(spec.rho > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff radius rho = {} must be > 0", spec.rho)));
    }
    Ok(spec.theta(x))
}
