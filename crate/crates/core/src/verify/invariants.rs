//! Sweeps of the structural invariants: energy orthogonality, the
//! direct/pseudospectral oracle, the norm sandwich, Poincare, the cutoff
//! profile and the radius schedules.

use serde::{Deserialize, Serialize};

use super::sampling::FieldSampler;
use crate::dynamics::{nonlinear_q, radius_schedule, Mode, QMethod};
use crate::error::Result;
use crate::gevrey::{norm, Family, GevreyParams, NormKind};
use crate::par::*;
use crate::spectral::poincare_check;

/// Outcome of one invariant sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub name: String,
    pub samples: usize,
    /// Largest observed violation measure, relative to the allowed bound
    /// (`<= 1` passes).
    pub worst: f64,
    pub pass: bool,
    pub detail: String,
}

impl InvariantReport {
    fn new(name: &str, samples: usize, worst: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            samples,
            worst,
            pass: worst <= 1.0,
            detail,
        }
    }
}

fn max_of(v: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in v {
        let x = x?;
        // NaN counts as a failure
        worst = if x.is_nan() { f64::INFINITY } else { worst.max(x) };
    }
    Ok(worst)
}

/// `|<Q(V,V), V>| / (1e-10 ||V||^2_{0,2} ||V||)` over random `V` in D0.
pub fn orthogonality(orders: &[usize], samples: usize, seed: u64) -> Result<InvariantReport> {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    for &n in orders {
        let idx: Vec<u64> = (0..samples as u64).collect();
        let w = max_of(par_iter!(idx).map(|&i| -> Result<f64> {
            let v = FieldSampler::new(0.05 + 0.05 * (i % 5) as f64, (i % 3) as f64).vector(n, seed.wrapping_add(i), true);
            let q = nonlinear_q(&v, &v, QMethod::Pseudospectral)?;
            let h2 = norm(&v, &GevreyParams::isotropic(0.0, 2.0), Family::Isotropic, NormKind::Full)?;
            let bound = tol * h2 * h2 * v.l2_norm();
            Ok(if bound == 0.0 { 0.0 } else { q.inner(&v).abs() / bound })
        }).collect::<Vec<_>>())?;
        worst = worst.max(w);
    }
    Ok(InvariantReport::new(
        "orthogonality",
        samples * orders.len(),
        worst,
        format!("orders {orders:?}, |<Q(V,V),V>| <= 1e-10 ||V||_(0,2)^2 ||V||"),
    ))
}

/// Largest `|Q_pseudo - Q_direct|` over all modes and `samples` pairs,
/// divided by `1e-10`.
pub fn oracle(order: usize, samples: usize, seed: u64) -> Result<InvariantReport> {
    let idx: Vec<u64> = (0..samples as u64).collect();
    let worst = max_of(par_iter!(idx).map(|&i| -> Result<f64> {
        let s = FieldSampler::new(0.1 + 0.05 * (i % 4) as f64, 0.0);
        let f = s.vector(order, seed.wrapping_add(2 * i), true);
        let g = s.vector(order, seed.wrapping_add(2 * i + 1), false);
        let a = nonlinear_q(&f, &g, QMethod::Pseudospectral)?;
        let b = nonlinear_q(&f, &g, QMethod::Direct)?;
        Ok(a.sub(&b).max_abs() / 1e-10)
    }).collect::<Vec<_>>())?;
    Ok(InvariantReport::new(
        "oracle",
        samples,
        worst,
        format!("order {order}, max |Q_pseudo - Q_direct| <= 1e-10"),
    ))
}

/// Norm equivalence `||S f||^2 + ||f||^2 <= ||f||^2_full <= 2 (...)` in both
/// families, with `S` the isotropic seminorm or the anisotropic split
/// seminorm. Measured as relative excess over `1e-12`.
pub fn sandwich(samples: usize, seed: u64) -> Result<InvariantReport> {
    let idx: Vec<u64> = (0..samples as u64).collect();
    let worst = max_of(par_iter!(idx).map(|&i| -> Result<f64> {
        let f = FieldSampler::new(0.05, 0.5).vector(1 + (i % 6) as usize, seed.wrapping_add(i), true);
        let tau = 0.01 * (i % 37) as f64;
        let gamma = 0.013 * (i % 23) as f64;
        let r = 2.6 + 0.1 * (i % 5) as f64;
        let l2 = f.l2_norm().powi(2);
        let mut w: f64 = 0.0;
        for (p, fam, semi) in [
            (GevreyParams::isotropic(tau, r), Family::Isotropic, NormKind::Seminorm),
            (GevreyParams::anisotropic(tau, r, gamma), Family::Anisotropic, NormKind::SplitSeminorm),
        ] {
            let full = norm(&f, &p, fam, NormKind::Full)?.powi(2);
            let lower = norm(&f, &p, fam, semi)?.powi(2) + l2;
            if full > 0.0 {
                w = w.max((lower / full - 1.0) / 1e-12);
                w = w.max((full / (2.0 * lower) - 1.0) / 1e-12);
            }
        }
        Ok(w)
    }).collect::<Vec<_>>())?;
    Ok(InvariantReport::new(
        "sandwich",
        samples,
        worst.max(0.0),
        "both families, relative tolerance 1e-12".into(),
    ))
}

/// `lhs / rhs` of the Poincare pair for random fields of order `2 n'`.
pub fn poincare(cutoffs: &[usize], samples: usize, seed: u64) -> Result<InvariantReport> {
    let mut worst: f64 = 0.0;
    for &c in cutoffs {
        let idx: Vec<u64> = (0..samples as u64).collect();
        let w = max_of(par_iter!(idx).map(|&i| -> Result<f64> {
            let f = FieldSampler::new(0.02 * (i % 5) as f64, 0.0).vector(2 * c.max(1), seed.wrapping_add(i), false);
            let (lhs, rhs) = poincare_check(&f, c)?;
            Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
        }).collect::<Vec<_>>())?;
        worst = worst.max(w);
    }
    Ok(InvariantReport::new(
        "poincare",
        samples * cutoffs.len(),
        worst,
        format!("cutoffs {cutoffs:?}, lhs <= rhs"),
    ))
}

/// Checks a cutoff profile `theta(x, rho)` on a grid of `points` values of
/// `x` in `[0, 2 rho]`: the sandwich `1_[0,rho/2] <= theta <= 1_[0,rho]` and
/// monotonicity. Any violation fails.
pub fn cutoff_profile(theta: &dyn Fn(f64, f64) -> f64, rho: f64, points: usize) -> InvariantReport {
    let mut violations = 0usize;
    let mut prev = f64::INFINITY;
    for i in 0..=points {
        let x = 2.0 * rho * i as f64 / points as f64;
        let t = theta(x, rho);
        let lower = if x <= 0.5 * rho { 1.0 } else { 0.0 };
        let upper = if x <= rho { 1.0 } else { 0.0 };
        if !(lower <= t && t <= upper) || t > prev {
            violations += 1;
        }
        prev = t;
    }
    let mut rep = InvariantReport::new(
        "cutoff",
        points + 1,
        violations as f64,
        format!("{violations} grid points violate the sandwich or monotonicity"),
    );
    rep.pass = violations == 0;
    rep
}

/// `tau(T) = tau0 / 2` exactly, `gamma(0) = 0`, `gamma` strictly increasing
/// (viscous) over a parameter sweep.
pub fn schedules() -> Result<InvariantReport> {
    let mut failures = Vec::new();
    let mut count = 0;
    for mode in [Mode::Inviscid, Mode::Viscous] {
        for tau0 in [0.1, 0.5, 1.0, 3.0] {
            for rho in [0.5, 1.0, 7.0] {
                for c in [0.1, 1.0, 2.0] {
                    count += 1;
                    let nu = 0.8;
                    let s = radius_schedule(mode, tau0, rho, c, nu)?;
                    let t = s.t_max;
                    let ok_end = s.tau(t) == 0.5 * tau0;
                    let ok_gamma = s.gamma(0.0) == 0.0
                        && match mode {
                            Mode::Inviscid => s.gamma(t) == 0.0,
                            Mode::Viscous => (1..=10).all(|i| s.gamma(t * i as f64 / 10.0) > s.gamma(t * (i - 1) as f64 / 10.0)),
                        };
                    let ok_pos = (0..=10).all(|i| s.tau(t * i as f64 / 10.0) > 0.0);
                    if !(ok_end && ok_gamma && ok_pos) {
                        failures.push(format!("{mode:?} tau0={tau0} rho={rho} C={c}"));
                    }
                }
            }
        }
    }
    let mut rep = InvariantReport::new(
        "schedule",
        count,
        failures.len() as f64,
        if failures.is_empty() { "tau(T) = tau0/2 exactly, gamma(0) = 0, gamma increasing".into() } else { failures.join("; ") },
    );
    rep.pass = failures.is_empty();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CutoffSpec;

    #[test]
    fn small_sweeps_pass() {
        assert!(orthogonality(&[3], 10, 1).unwrap().pass);
        assert!(oracle(2, 3, 1).unwrap().pass);
        assert!(sandwich(50, 1).unwrap().pass);
        assert!(poincare(&[1, 2], 20, 1).unwrap().pass);
        assert!(schedules().unwrap().pass);
    }

    #[test]
    fn cutoff_profiles() {
        let smooth = |x: f64, rho: f64| CutoffSpec { rho }.theta(x);
        assert!(cutoff_profile(&smooth, 2.0, 10_000).pass);
        let broken = |_x: f64, _rho: f64| 1.0;
        let rep = cutoff_profile(&broken, 2.0, 100);
        assert!(!rep.pass);
        assert_eq!(rep.worst, 50.0);
    }
}
