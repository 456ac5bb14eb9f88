use serde::{Deserialize, Serialize};

use crate::dynamics::Mode;
use crate::error::{Error, Result};
use crate::gevrey::{apply_multiplier, fit_line, norm, weighted_norm, Family, GevreyParams, NormKind, SpectralMultiplier};
use crate::spectral::VectorField;
use crate::verify::sampling::FieldSampler;

/// Seed offset of the fixed additive forcing shapes `g_k`.
const ADDITIVE_BASIS_SEED: u64 = 0x5eed_0add;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `sigma_k(V) = alpha_k g_k` with fixed analytic `g_k`.
    Additive,
    /// `sigma_k(V) = alpha_k V`
    Multiplicative,
    /// `sigma_k(V) = alpha_k / (1 + k) A^(1/2) V`, `k` counted from 1.
    HalfDerivative,
    /// `sigma_k(V) = beta_k A_z V`. Viscous runs only.
    VerticalTransport,
}

/// Finite family of noise maps `sigma_1 .. sigma_{m_W}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub alphas: Vec<f64>,
    /// Analytic radius of the additive shapes, `g_k ~ exp(-mu |k|)`. Must
    /// exceed every radius the run measures.
    #[serde(default = "default_additive_mu")]
    pub additive_mu: f64,
}

fn default_additive_mu() -> f64 {
    2.0
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::Multiplicative,
            alphas: Vec::new(),
            additive_mu: default_additive_mu(),
        }
    }

    /// `m_w` equal coefficients with `sum alpha_k^2 = strength^2`.
    pub fn uniform(kind: NoiseKind, m_w: usize, strength: f64) -> Self {
        let a = if m_w == 0 { 0.0 } else { strength / (m_w as f64).sqrt() };
        Self {
            kind,
            alphas: vec![a; m_w],
            additive_mu: default_additive_mu(),
        }
    }

    pub fn m_w(&self) -> usize {
        self.alphas.len()
    }

    pub fn sum_sq(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.alphas.iter().all(|a| *a == 0.0)
    }

    pub fn admissible_in(&self, mode: Mode) -> Result<()> {
        if self.kind == NoiseKind::VerticalTransport && mode == Mode::Inviscid {
            return Err(Error::Config(
                "vertical_transport noise needs vertical viscosity; it is not admissible in inviscid runs".into(),
            ));
        }
        if let Some(a) = self.alphas.iter().find(|a| !a.is_finite()) {
            return Err(Error::Config(format!("noise coefficient {a} is not finite")));
        }
        if !(self.additive_mu > 0.0 && self.additive_mu.is_finite()) {
            return Err(Error::Config(format!("additive_mu = {} must be > 0", self.additive_mu)));
        }
        Ok(())
    }

    /// Effective scalar weight of `sigma_k` in front of its operator.
    fn weight(&self, k: usize) -> f64 {
        match self.kind {
            NoiseKind::HalfDerivative => self.alphas[k] / (2.0 + k as f64),
            _ => self.alphas[k],
        }
    }

    /// The maps realized at Galerkin order `order`.
    pub fn at_order(&self, order: usize) -> NoiseOperator {
        let basis = if self.kind == NoiseKind::Additive {
            let sampler = FieldSampler::new(self.additive_mu, 0.0);
            (0..self.m_w())
                .map(|k| sampler.vector(order, ADDITIVE_BASIS_SEED + k as u64, true))
                .collect()
        } else {
            Vec::new()
        };
        NoiseOperator {
            model: self.clone(),
            order,
            basis,
        }
    }
}

/// A [`NoiseModel`] at a fixed order, with the additive shapes drawn once.
#[derive(Debug, Clone)]
pub struct NoiseOperator {
    model: NoiseModel,
    order: usize,
    basis: Vec<VectorField>,
}

impl NoiseOperator {
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// The state-dependent operator shared by all `sigma_k` (identity for
    /// multiplicative noise).
    fn operator(&self, v: &VectorField) -> VectorField {
        match self.model.kind {
            NoiseKind::Additive | NoiseKind::Multiplicative => v.clone(),
            NoiseKind::HalfDerivative => {
                apply_multiplier(v, SpectralMultiplier::Pow { a: 0.5 }).expect("polynomial multipliers cannot overflow")
            }
            NoiseKind::VerticalTransport => {
                apply_multiplier(v, SpectralMultiplier::PowZ { a: 1.0 }).expect("polynomial multipliers cannot overflow")
            }
        }
    }

    /// `sigma_k(V)`, zero based.
    pub fn sigma_k(&self, v: &VectorField, k: usize) -> Result<VectorField> {
        self.check(v)?;
        if k >= self.model.m_w() {
            return Err(Error::InvalidArgument(format!("noise index {k} >= m_W = {}", self.model.m_w())));
        }
        Ok(match self.model.kind {
            NoiseKind::Additive => self.basis[k].scaled(self.model.alphas[k]),
            _ => self.operator(v).scaled(self.model.weight(k)),
        })
    }

    fn check(&self, v: &VectorField) -> Result<()> {
        if v.order() != self.order {
            return Err(Error::InvalidArgument(format!(
                "noise prepared at order {}, field has order {}",
                self.order,
                v.order()
            )));
        }
        Ok(())
    }

    /// `P_D0 sum_k sigma_k(V) dW_k`.
    pub fn apply(&self, v: &VectorField, dw: &[f64]) -> Result<VectorField> {
        self.check(v)?;
        if dw.len() != self.model.m_w() {
            return Err(Error::InvalidArgument(format!(
                "{} Wiener increments for m_W = {}",
                dw.len(),
                self.model.m_w()
            )));
        }
        let out = match self.model.kind {
            NoiseKind::Additive => {
                let mut out = VectorField::zeros(self.order);
                for ((g, a), w) in self.basis.iter().zip(&self.model.alphas).zip(dw) {
                    out.axpy(a * w, g);
                }
                out
            }
            _ => {
                let c: f64 = (0..dw.len()).map(|k| self.model.weight(k) * dw[k]).sum();
                if c == 0.0 {
                    return Ok(VectorField::zeros(self.order));
                }
                self.operator(v).scaled(c)
            }
        };
        Ok(out.project_d0())
    }

    /// `sum_k ||sigma_k(V) - sigma_k(V')||^2` in the given norm.
    fn hs_sq(&self, v: &VectorField, v2: Option<&VectorField>, params: &GevreyParams, family: Family) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.model.m_w() {
            let mut s = self.sigma_k(v, k)?;
            if let Some(v2) = v2 {
                s = s.sub(&self.sigma_k(v2, k)?);
            }
            total += norm(&s, params, family, NormKind::Full)?.powi(2);
        }
        Ok(total)
    }
}

/// Empirical constants of the growth and Lipschitz hypotheses on the noise.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseReport {
    pub kind: NoiseKind,
    pub samples: usize,
    /// `sup ||sigma(V)||^2_HS / (1 + ||V||^2_hi)`
    pub growth_c: f64,
    /// Slope of `||sigma(V)||^2_HS` against `||V||^2_hi` over the samples.
    pub growth_slope: f64,
    /// `sup ||sigma(V) - sigma(V')||^2_HS / ||V - V'||^2_hi`
    pub lipschitz_c: f64,
    /// Same ratio measured against `||V - V'||^2` in the target space.
    pub lipschitz_same_space: f64,
    /// `sup ||sigma(V)||^2_HS / ||A_z V||^2` (vertical transport only).
    pub delta_emp_sq: Option<f64>,
    pub delta_sq_configured: Option<f64>,
    /// Largest `||V||_hi` reached by the samples.
    pub max_norm: f64,
}

/// The stronger space `||.||_{tau,r+1/2}` or `||.||_{tau,r+1/2,gamma,r}` the
/// hypotheses bound the noise by.
fn raised(params: &GevreyParams, family: Family) -> GevreyParams {
    match family {
        Family::Isotropic => params.shifted(0.5, 0.5),
        Family::Anisotropic => params.shifted(0.5, 0.0),
    }
}

/// Samples `samples` states with amplitudes from `1e-1` to `1e3` (in the
/// target norm) and measures the sup ratios of the noise hypotheses.
pub fn verify_noise_conditions(
    model: &NoiseModel,
    order: usize,
    params: &GevreyParams,
    family: Family,
    samples: usize,
    seed: u64,
) -> Result<NoiseReport> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    if model.kind == NoiseKind::Additive && model.additive_mu <= params.tau.max(params.gamma) {
        return Err(Error::InvalidArgument(format!(
            "additive shapes with radius {} are not in the space of radius {}",
            model.additive_mu, params.tau
        )));
    }
    let op = model.at_order(order);
    let hi = raised(params, family);
    let sampler = FieldSampler::new(params.tau + 0.3, 1.0);
    let unit = |s: u64| -> Result<VectorField> {
        let v = sampler.vector(order, s, true);
        let n = norm(&v, params, family, NormKind::Full)?;
        Ok(v.scaled(1.0 / n))
    };

    let mut growth_c: f64 = 0.0;
    let mut lipschitz_c: f64 = 0.0;
    let mut lipschitz_same: f64 = 0.0;
    let mut delta: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let amp = 10f64.powf(-1.0 + 4.0 * i as f64 / (samples - 1) as f64);
        let v = unit(seed.wrapping_add(2 * i as u64))?.scaled(amp);
        let v2 = unit(seed.wrapping_add(2 * i as u64 + 1))?.scaled(amp);

        let hs = op.hs_sq(&v, None, params, family)?;
        let hi_sq = norm(&v, &hi, family, NormKind::Full)?.powi(2);
        max_norm = max_norm.max(hi_sq.sqrt());
        growth_c = growth_c.max(hs / (1.0 + hi_sq));
        points.push((hi_sq, hs));

        let diff = v.sub(&v2);
        let d_hs = op.hs_sq(&v, Some(&v2), params, family)?;
        let d_hi = norm(&diff, &hi, family, NormKind::Full)?.powi(2);
        let d_same = norm(&diff, params, family, NormKind::Full)?.powi(2);
        if d_hi > 0.0 {
            lipschitz_c = lipschitz_c.max(d_hs / d_hi);
            lipschitz_same = lipschitz_same.max(d_hs / d_same);
        }
        if model.kind == NoiseKind::VerticalTransport {
            let az = weighted_norm(&v, params, family, |m| {
                let kz2 = m.kz_abs().powi(2);
                kz2 * (1.0 + m.kh_abs().powf(2.0 * params.r) + m.kz_abs().powf(2.0 * params.s))
            })?
            .powi(2);
            if az > 0.0 {
                delta = delta.max(hs / az);
            }
        }
    }
    let growth_slope = fit_line(&points).map_or(0.0, |f| f.slope);
    let transport = model.kind == NoiseKind::VerticalTransport;
    Ok(NoiseReport {
        kind: model.kind,
        samples,
        growth_c,
        growth_slope,
        lipschitz_c,
        lipschitz_same_space: lipschitz_same,
        delta_emp_sq: transport.then_some(delta),
        delta_sq_configured: transport.then(|| model.sum_sq()),
        max_norm,
    })
}
