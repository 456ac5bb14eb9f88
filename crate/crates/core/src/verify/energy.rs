use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::Trajectory;

/// Empirical energy budget of an ensemble and the constant it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub trajectories: usize,
    pub p: f64,
    pub horizon: f64,
    /// `E ||V_0||^p`
    pub mean_initial: f64,
    /// `E [sup ||V||^p + sum dt ||A^r E V||^(p-2) D(V)]`
    pub mean_budget: f64,
    /// Smallest `C` with `mean_budget <= C (1 + mean_initial) exp(C T)`.
    pub c_emp: f64,
}

/// Budget of one trajectory: sup of the active norm to the `p` plus the
/// left-point sum of the dissipation integrand.
pub fn trajectory_budget(traj: &Trajectory, p: f64) -> f64 {
    let sup = traj.records.iter().map(|r| r.gevrey.powf(p)).fold(0.0, f64::max);
    let integral: f64 = traj
        .records
        .windows(2)
        .map(|w| (w[1].t - w[0].t) * w[0].seminorm.powf(p - 2.0) * w[0].dissipation_sq)
        .sum();
    sup + integral
}

/// Solves `c (1 + m0) exp(c t) = budget` for `c >= 0` by bisection.
pub fn implied_constant(budget: f64, m0: f64, t: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * (1.0 + m0) * (c * t).exp() - budget;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn energy_budget(ensemble: &[Trajectory], p: f64, horizon: f64) -> Result<EnergyReport> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("energy budget of an empty ensemble".into()));
    }
    if p < 2.0 {
        return Err(Error::InvalidArgument(format!("energy budget needs p >= 2, got {p}")));
    }
    let n = ensemble.len() as f64;
    let mean_initial = ensemble.iter().map(|t| t.records.first().map_or(0.0, |r| r.gevrey.powf(p))).sum::<f64>() / n;
    let mean_budget = ensemble.iter().map(|t| trajectory_budget(t, p)).sum::<f64>() / n;
    Ok(EnergyReport {
        trajectories: ensemble.len(),
        p,
        horizon,
        mean_initial,
        mean_budget,
        c_emp: implied_constant(mean_budget, mean_initial, horizon),
    })
}
