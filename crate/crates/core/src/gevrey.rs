//! Diagonal Fourier multipliers and the analytic norms built from them.
//!
//! Exponential weights are handled in log space: each mode contributes
//! `log(poly) + 2 * exponent + log|a|^2` and the sum is exponentiated once
//! after factoring out the largest term, so norms stay finite as long as the
//! individual exponents pass the overflow guard.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ModeIndex, SpectralField};

/// Largest admissible exponent `tau |k|` (or `tau |k'| + gamma |k3|`).
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralMultiplier {
    /// `A^a`, symbol `|k|^a`
    Pow { a: f64 },
    /// `A_h^a`, symbol `|k'|^a`
    PowH { a: f64 },
    /// `A_z^a`, symbol `|k3|^a`
    PowZ { a: f64 },
    /// `exp(tau A)`
    Exp { tau: f64 },
    /// `exp(tau A_h) exp(gamma A_z)`
    ExpAniso { tau: f64, gamma: f64 },
}

fn guard(m: &ModeIndex, exponent: f64) -> Result<f64> {
    if exponent > EXPONENT_LIMIT {
        Err(Error::RadiusTooLarge { mode: *m, exponent })
    } else {
        Ok(exponent)
    }
}

impl SpectralMultiplier {
    /// Symbol at `m`. `0^0` is taken as 1, so `A^0` is the identity.
    pub fn value(&self, m: &ModeIndex) -> Result<f64> {
        Ok(match *self {
            Self::Pow { a } => m.k_abs().powf(a),
            Self::PowH { a } => m.kh_abs().powf(a),
            Self::PowZ { a } => m.kz_abs().powf(a),
            Self::Exp { tau } => guard(m, tau * m.k_abs())?.exp(),
            Self::ExpAniso { tau, gamma } => guard(m, tau * m.kh_abs() + gamma * m.kz_abs())?.exp(),
        })
    }
}

pub fn apply_multiplier<const C: usize>(
    field: &SpectralField<C>,
    mult: SpectralMultiplier,
) -> Result<SpectralField<C>> {
    let weights = field.modes().iter().map(|m| mult.value(m)).collect::<Result<Vec<_>>>()?;
    let mut out = field.clone();
    for (a, w) in out.coeffs_mut().iter_mut().zip(weights) {
        for c in a.iter_mut() {
            *c *= w;
        }
    }
    Ok(out)
}

/// Radii and Sobolev exponents of the active norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub tau: f64,
    pub r: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Vertical Sobolev exponent; equal to `r` in every built-in use.
    pub s: f64,
}

impl GevreyParams {
    pub fn new(tau: f64, r: f64, gamma: f64, s: f64) -> Result<Self> {
        for (name, v) in [("tau", tau), ("r", r), ("gamma", gamma), ("s", s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Self { tau, r, gamma, s })
    }

    pub fn isotropic(tau: f64, r: f64) -> Self {
        Self { tau, r, gamma: 0.0, s: r }
    }

    pub fn anisotropic(tau: f64, r: f64, gamma: f64) -> Self {
        Self { tau, r, gamma, s: r }
    }

    /// Same radii, Sobolev exponents raised by `dr` (horizontal) and `ds`
    /// (vertical).
    pub fn shifted(&self, dr: f64, ds: f64) -> Self {
        Self {
            r: self.r + dr,
            s: self.s + ds,
            ..*self
        }
    }

    /// Exponent of the exponential weight at `m` for the given family.
    pub fn exponent(&self, family: Family, m: &ModeIndex) -> Result<f64> {
        let e = match family {
            Family::Isotropic => self.tau * m.k_abs(),
            Family::Anisotropic => self.tau * m.kh_abs() + self.gamma * m.kz_abs(),
        };
        guard(m, e)
    }
}

/// `||.||_{tau,r}` (isotropic, inviscid runs) or `||.||_{tau,r,gamma,s}`
/// (anisotropic, viscous runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Isotropic,
    Anisotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Isotropic `(1 + |k|^2r)`, anisotropic `(1 + |k'|^2r + |k3|^2s)`,
    /// times the squared exponential weight.
    Full,
    /// `||A^r E f||` with `E` the family's exponential. In the anisotropic
    /// family this is the seminorm appearing in the energy estimates.
    Seminorm,
    /// `(|k'|^2r + |k3|^2s)` times the squared exponential: the part of the
    /// anisotropic full norm above the `L2` term. Equal to `Seminorm` in
    /// the isotropic family.
    SplitSeminorm,
    /// Plain `L2`.
    L2,
}

fn polynomial(params: &GevreyParams, family: Family, kind: NormKind, m: &ModeIndex) -> f64 {
    let r2 = 2.0 * params.r;
    match (family, kind) {
        (_, NormKind::L2) => 1.0,
        (Family::Isotropic, NormKind::Full) => 1.0 + m.k_abs().powf(r2),
        (Family::Isotropic, _) => m.k_abs().powf(r2),
        (Family::Anisotropic, NormKind::Full) => {
            1.0 + m.kh_abs().powf(r2) + m.kz_abs().powf(2.0 * params.s)
        }
        (Family::Anisotropic, NormKind::Seminorm) => m.k_abs().powf(r2),
        (Family::Anisotropic, NormKind::SplitSeminorm) => {
            m.kh_abs().powf(r2) + m.kz_abs().powf(2.0 * params.s)
        }
    }
}

/// `(sum_m poly(m) exp(2 exponent(m)) |a_m|^2)^(1/2)` evaluated in log space.
///
/// `poly` must be non-negative. The exponential weight is the one of
/// `family` at `params`; pass `params` with zero radii for plain Sobolev
/// sums.
pub fn weighted_norm<const C: usize>(
    field: &SpectralField<C>,
    params: &GevreyParams,
    family: Family,
    poly: impl Fn(&ModeIndex) -> f64,
) -> Result<f64> {
    let mut logs = Vec::with_capacity(field.coeffs().len());
    for (m, a) in field.modes().iter().zip(field.coeffs()) {
        let amp: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        let w = poly(m);
        if amp == 0.0 || w == 0.0 {
            continue;
        }
        let e = if params.tau == 0.0 && params.gamma == 0.0 {
            0.0
        } else {
            params.exponent(family, m)?
        };
        logs.push(w.ln() + 2.0 * e + amp.ln());
    }
    Ok(log_sum_exp(&logs).map_or(0.0, |l| (0.5 * l).exp()))
}

/// `log(sum exp(x_i))`, or `None` for an empty slice. Summation is in slice
/// order so results are reproducible.
pub fn log_sum_exp(xs: &[f64]) -> Option<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || max == f64::NEG_INFINITY {
        return None;
    }
    if !max.is_finite() {
        return Some(max);
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    Some(max + s.ln())
}

pub fn norm<const C: usize>(
    field: &SpectralField<C>,
    params: &GevreyParams,
    family: Family,
    kind: NormKind,
) -> Result<f64> {
    if kind == NormKind::L2 {
        return Ok(field.l2_norm());
    }
    weighted_norm(field, params, family, |m| polynomial(params, family, kind, m))
}

/// Energy per vertical wavenumber: `(|k3|, sum_{k'} |f_hat|^2)` for every
/// `m3 = 0..=order`, ascending.
pub fn vertical_spectrum_decay<const C: usize>(field: &SpectralField<C>) -> Vec<(f64, f64)> {
    let mut buckets = vec![0.0; field.order() + 1];
    for (m, a) in field.modes().iter().zip(field.coeffs()) {
        buckets[m.m3 as usize] += a.iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(m3, e)| (2.0 * std::f64::consts::PI * m3 as f64, e))
        .collect()
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fitted exponential decay rate `g` of the coefficients, from
/// `energy(k3) ~ exp(-2 g |k3|)`. Empty buckets are skipped.
pub fn fit_vertical_decay(spectrum: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = spectrum
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(k, e)| (k, e.ln()))
        .collect();
    fit_line(&pts).map(|f| -0.5 * f.slope)
}
