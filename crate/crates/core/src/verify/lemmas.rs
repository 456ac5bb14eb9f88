//! Sampled ratios for the trilinear and product estimates.
//!
//! Every check returns `(lhs, rhs0)` where `rhs0` is the right side without
//! its constant; the sup of `lhs / rhs0` over samples is the empirical
//! constant.

use serde::{Deserialize, Serialize};

use super::sampling::FieldSampler;
use crate::dynamics::{nonlinear_q, QMethod};
use crate::error::{Error, Result};
use crate::gevrey::{norm, weighted_norm, Family, GevreyParams, NormKind};
use crate::par::*;
use crate::spectral::{product, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    /// Inviscid trilinear estimate.
    LemmaA1,
    /// Viscous trilinear estimate.
    LemmaA2,
    /// `||fg||_{tau,r} <= C ||f||_{tau,r} ||g||_{tau,r}`
    BanachIsotropic,
    /// Seminorm form `||A^r E(fg)|| <= C (|f0| + ||A^r E f||)(|g0| + ||A^r E g||)`.
    BanachIsotropicSeminorm,
    BanachAnisotropic,
    BanachAnisotropicSeminorm,
}

impl Estimate {
    pub const ALL: [Estimate; 6] = [
        Estimate::LemmaA1,
        Estimate::LemmaA2,
        Estimate::BanachIsotropic,
        Estimate::BanachIsotropicSeminorm,
        Estimate::BanachAnisotropic,
        Estimate::BanachAnisotropicSeminorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimate::LemmaA1 => "lemma_a1",
            Estimate::LemmaA2 => "lemma_a2",
            Estimate::BanachIsotropic => "banach_iso",
            Estimate::BanachIsotropicSeminorm => "banach_iso_seminorm",
            Estimate::BanachAnisotropic => "banach_aniso",
            Estimate::BanachAnisotropicSeminorm => "banach_aniso_seminorm",
        }
    }

    fn family(self) -> Family {
        match self {
            Estimate::LemmaA1 | Estimate::BanachIsotropic | Estimate::BanachIsotropicSeminorm => Family::Isotropic,
            _ => Family::Anisotropic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub order: usize,
    pub samples: usize,
    pub worst_ratio: f64,
    pub empirical_c: f64,
    /// The ratio is finite on every sample.
    pub pass: bool,
}

/// `sum_m |k|^2r exp(2 e(m)) Re <a_m, b_m>`: the inner product of
/// `A^r E a` and `A^r E b`.
fn weighted_inner(a: &VectorField, b: &VectorField, params: &GevreyParams, family: Family) -> Result<f64> {
    let r2 = 2.0 * params.r;
    let mut total = 0.0;
    for ((m, x), y) in a.modes().iter().zip(a.coeffs()).zip(b.coeffs()) {
        let e = params.exponent(family, m)?;
        let w = m.k_abs().powf(r2) * (2.0 * e).exp();
        total += w * (x[0] * y[0].conj() + x[1] * y[1].conj()).re;
    }
    Ok(total)
}

/// `||A^(r+1/2) e^(tau A) f||`
fn iso_half(f: &VectorField, p: &GevreyParams) -> Result<f64> {
    norm(f, &p.shifted(0.5, 0.5), Family::Isotropic, NormKind::Seminorm)
}

/// `||A_h^(1/2) A^r E f||`
fn aniso_half_h(f: &VectorField, p: &GevreyParams) -> Result<f64> {
    let r2 = 2.0 * p.r;
    weighted_norm(f, p, Family::Anisotropic, |m| m.kh_abs() * m.k_abs().powf(r2))
}

/// `||A_z A^r E f||`
fn aniso_z(f: &VectorField, p: &GevreyParams) -> Result<f64> {
    let r2 = 2.0 * p.r;
    weighted_norm(f, p, Family::Anisotropic, |m| m.kz_abs().powi(2) * m.k_abs().powf(r2))
}

/// `(|<A^r e^(tau A) Q(f,g), A^r e^(tau A) h>|, rhs0)` for the inviscid
/// trilinear estimate.
pub fn check_lemma_a1(f: &VectorField, g: &VectorField, h: &VectorField, tau: f64, r: f64) -> Result<(f64, f64)> {
    if r <= 2.0 {
        return Err(Error::InvalidArgument(format!("the trilinear estimate needs r > 2, got {r}")));
    }
    let p = GevreyParams::isotropic(tau, r);
    let q = nonlinear_q(f, g, QMethod::Pseudospectral)?;
    let lhs = weighted_inner(&q, h, &p, Family::Isotropic)?.abs();
    let full = |x: &VectorField| norm(x, &p, Family::Isotropic, NormKind::Full);
    let (hf, hg, hh) = (iso_half(f, &p)?, iso_half(g, &p)?, iso_half(h, &p)?);
    let rhs = full(f)? * hg * hh + full(g)? * hf * hh + full(h)? * hf * hg;
    Ok((lhs, rhs))
}

/// Viscous trilinear estimate: the three products with `A_h^(1/2)`
/// seminorms plus the two products mixing in `A_z`.
pub fn check_lemma_a2(
    f: &VectorField,
    g: &VectorField,
    h: &VectorField,
    tau: f64,
    gamma: f64,
    r: f64,
) -> Result<(f64, f64)> {
    if r <= 2.0 {
        return Err(Error::InvalidArgument(format!("the trilinear estimate needs r > 2, got {r}")));
    }
    let p = GevreyParams::anisotropic(tau, r, gamma);
    let q = nonlinear_q(f, g, QMethod::Pseudospectral)?;
    let lhs = weighted_inner(&q, h, &p, Family::Anisotropic)?.abs();
    let full = |x: &VectorField| norm(x, &p, Family::Anisotropic, NormKind::Full);
    let (hf, hg, hh) = (aniso_half_h(f, &p)?, aniso_half_h(g, &p)?, aniso_half_h(h, &p)?);
    let semi_f = norm(f, &p, Family::Anisotropic, NormKind::Seminorm)?;
    let rhs = full(f)? * hg * hh
        + full(g)? * hf * hh
        + full(h)? * hf * hg
        + semi_f * (hg * aniso_z(h, &p)? + aniso_z(g, &p)? * hh);
    Ok((lhs, rhs))
}

/// `(||fg||, rhs0)` for the product estimates, full norm or seminorm form.
pub fn check_banach_algebra(
    f: &ScalarField,
    g: &ScalarField,
    params: &GevreyParams,
    family: Family,
    seminorm: bool,
) -> Result<(f64, f64)> {
    if params.r <= 1.5 {
        return Err(Error::InvalidArgument(format!("the product estimate needs r > 3/2, got {}", params.r)));
    }
    let fg = product(f, g);
    if seminorm {
        let s = |x: &ScalarField| norm(x, params, family, NormKind::Seminorm);
        let aug = |x: &ScalarField| -> Result<f64> { Ok(x.mean().norm() + s(x)?) };
        Ok((s(&fg)?, aug(f)? * aug(g)?))
    } else {
        let n = |x: &ScalarField| norm(x, params, family, NormKind::Full);
        Ok((n(&fg)?, n(f)? * n(g)?))
    }
}

/// `lhs / rhs0`, with `0/0 = 0`. A positive left side over a zero right
/// side would falsify the estimate and is an error.
pub fn ratio(lhs: f64, rhs: f64) -> Result<f64> {
    if rhs == 0.0 {
        if lhs == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::ContractViolation(format!("left side {lhs} against a zero right side")));
    }
    Ok(lhs / rhs)
}

/// Parameters of a sampled sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub tau: f64,
    pub gamma: f64,
    pub r: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Envelope of sample `i`: the decay rate and the algebraic order cycle
/// so the sweep mixes smooth and rough draws.
fn sampler_for(i: usize, radius: f64) -> FieldSampler {
    let mu = radius + 0.05 + 0.1 * (i % 7) as f64;
    let q = (i % 4) as f64;
    FieldSampler::new(mu, q)
}

fn sample_vector(i: usize, k: u64, order: usize, sp: &SweepParams, d0: bool) -> VectorField {
    sampler_for(i, sp.tau.max(sp.gamma)).vector(order, sp.seed.wrapping_add(3 * i as u64 + k), d0)
}

fn sample_scalar(i: usize, k: u64, order: usize, sp: &SweepParams) -> ScalarField {
    sampler_for(i, sp.tau.max(sp.gamma)).scalar(order, sp.seed.wrapping_add(3 * i as u64 + k))
}

/// Ratio of sample `i` at `order`.
pub fn sample_ratio(est: Estimate, order: usize, sp: &SweepParams, i: usize) -> Result<f64> {
    let (lhs, rhs) = match est {
        Estimate::LemmaA1 | Estimate::LemmaA2 => {
            let f = sample_vector(i, 0, order, sp, true);
            let g = sample_vector(i, 1, order, sp, true);
            let h = sample_vector(i, 2, order, sp, true);
            if est == Estimate::LemmaA1 {
                check_lemma_a1(&f, &g, &h, sp.tau, sp.r)?
            } else {
                check_lemma_a2(&f, &g, &h, sp.tau, sp.gamma, sp.r)?
            }
        }
        _ => {
            let f = sample_scalar(i, 0, order, sp);
            let g = sample_scalar(i, 1, order, sp);
            let p = match est.family() {
                Family::Isotropic => GevreyParams::isotropic(sp.tau, sp.r),
                Family::Anisotropic => GevreyParams::anisotropic(sp.tau, sp.r, sp.gamma),
            };
            let semi = matches!(est, Estimate::BanachIsotropicSeminorm | Estimate::BanachAnisotropicSeminorm);
            check_banach_algebra(&f, &g, &p, est.family(), semi)?
        }
    };
    ratio(lhs, rhs)
}

/// Sup of the ratio over `sp.samples` draws at `order`.
pub fn sweep(est: Estimate, order: usize, sp: &SweepParams) -> Result<InequalityReport> {
    let idx: Vec<usize> = (0..sp.samples).collect();
    let ratios: Vec<Result<f64>> = par_iter!(idx).map(|&i| sample_ratio(est, order, sp, i)).collect();
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for r in ratios {
        let r = r?;
        finite &= r.is_finite();
        worst = worst.max(r);
    }
    Ok(InequalityReport {
        name: est.name().to_string(),
        order,
        samples: sp.samples,
        worst_ratio: worst,
        empirical_c: worst,
        pass: finite,
    })
}

/// Comparison of the sampled sup between consecutive orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub name: String,
    pub reports: Vec<InequalityReport>,
    /// Largest `|max_N / max_{N_prev} - 1|` over consecutive orders.
    pub max_relative_change: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn stability(est: Estimate, orders: &[usize], sp: &SweepParams, tolerance: f64) -> Result<StabilityReport> {
    let reports = orders.iter().map(|&n| sweep(est, n, sp)).collect::<Result<Vec<_>>>()?;
    let mut change: f64 = 0.0;
    let mut pass = reports.iter().all(|r| r.pass);
    for w in reports.windows(2) {
        let (a, b) = (w[0].worst_ratio, w[1].worst_ratio);
        let c = if a == 0.0 { if b == 0.0 { 0.0 } else { f64::INFINITY } } else { (b / a - 1.0).abs() };
        change = change.max(c);
        // no single order may jump past ten times the running maximum
        pass &= b <= 10.0 * a.max(f64::MIN_POSITIVE);
    }
    pass &= change <= tolerance;
    Ok(StabilityReport {
        name: est.name().to_string(),
        reports,
        max_relative_change: change,
        tolerance,
        pass,
    })
}

/// Largest `|ratio(lambda f, lambda g, lambda h) / ratio(f, g, h) - 1|` of the
/// inviscid trilinear estimate over `samples` draws and a few `lambda`.
pub fn scaling_invariance(order: usize, sp: &SweepParams) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..sp.samples {
        let f = sample_vector(i, 0, order, sp, true);
        let g = sample_vector(i, 1, order, sp, true);
        let h = sample_vector(i, 2, order, sp, true);
        let (l0, r0) = check_lemma_a1(&f, &g, &h, sp.tau, sp.r)?;
        let base = ratio(l0, r0)?;
        for lambda in [1e-3, 0.37, 5.0, 1e3] {
            let (l, r) = check_lemma_a1(&f.scaled(lambda), &g.scaled(lambda), &h.scaled(lambda), sp.tau, sp.r)?;
            let scaled = ratio(l, r)?;
            if base != 0.0 {
                worst = worst.max((scaled / base - 1.0).abs());
            }
        }
    }
    Ok(worst)
}

/// Default step-size constant: twice the sampled inviscid trilinear sup.
pub fn calibrate_c(sp: &SweepParams, order: usize) -> Result<f64> {
    Ok(2.0 * sweep(Estimate::LemmaA1, order, sp)?.worst_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ModeIndex, C64};

    fn zero_triple(order: usize) -> [VectorField; 3] {
        [VectorField::zeros(order), VectorField::zeros(order), VectorField::zeros(order)]
    }

    fn sp(samples: usize) -> SweepParams {
        SweepParams {
            tau: 0.1,
            gamma: 0.05,
            r: 2.6,
            samples,
            seed: 11,
        }
    }

    #[test]
    fn zero_triple_has_zero_ratio() {
        let [f, g, h] = zero_triple(3);
        let (l, r) = check_lemma_a1(&f, &g, &h, 0.1, 2.6).unwrap();
        assert_eq!(ratio(l, r).unwrap(), 0.0);
    }

    #[test]
    fn constant_f_single_mode_g_h() {
        let mut f = VectorField::zeros(3);
        f.set_real_mode(ModeIndex::ZERO, [C64::new(1.0, 0.0), C64::new(0.5, 0.0)]).unwrap();
        let mut g = VectorField::zeros(3);
        g.set_real_mode(ModeIndex::new(1, 0, 1), [C64::new(0.0, 1.0), C64::new(0.3, 0.0)]).unwrap();
        let h = g.clone();
        let (l, r) = check_lemma_a1(&f, &g, &h, 0.1, 2.6).unwrap();
        // f . grad g is skew: <i k1 g, g> = 0 for a single real mode pair
        assert!(l <= 1e-12 * r);
        assert!(ratio(l, r).unwrap().is_finite());
    }

    #[test]
    fn a2_with_zero_gamma_uses_horizontal_weights() {
        let s = FieldSampler::new(0.4, 1.0);
        let (f, g, h) = (s.vector(3, 1, true), s.vector(3, 2, true), s.vector(3, 3, true));
        let (l, _) = check_lemma_a2(&f, &g, &h, 0.2, 0.0, 2.6).unwrap();
        let q = nonlinear_q(&f, &g, QMethod::Direct).unwrap();
        let mut direct = 0.0;
        for ((m, a), b) in q.modes().iter().zip(q.coeffs()).zip(h.coeffs()) {
            let w = m.k_abs().powf(5.2) * (0.4 * m.kh_abs()).exp();
            direct += w * (a[0] * b[0].conj() + a[1] * b[1].conj()).re;
        }
        assert!((l - direct.abs()).abs() <= 1e-9 * l.abs());
    }

    #[test]
    fn a2_with_z_independent_f_is_bounded() {
        let s = FieldSampler::new(0.4, 1.0);
        let f = s.vector(3, 1, true);
        let f = VectorField::from_fn(3, |m| if m.m3 == 0 { f.get(m).unwrap() } else { [C64::new(0.0, 0.0); 2] });
        let (l, r) = check_lemma_a2(&f, &s.vector(3, 2, true), &s.vector(3, 3, true), 0.2, 0.1, 2.6).unwrap();
        assert!(ratio(l, r).unwrap().is_finite());
    }

    #[test]
    fn constants_square_to_unit_ratio() {
        let c = ScalarField::constant(2, 3.0);
        let p = GevreyParams::isotropic(0.3, 1.6);
        let (l, r) = check_banach_algebra(&c, &c, &p, Family::Isotropic, false).unwrap();
        assert!((l / r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_modes_by_hand() {
        // cos(2 pi z) * cos(2 pi z) = (1 + cos(4 pi z)) / 2
        let m = ModeIndex::new(0, 0, 1);
        let mut f = ScalarField::zeros(1);
        f.set_real_mode(m, [C64::new(1.0, 0.0)]).unwrap();
        let fg = product(&f, &f);
        assert!((fg.mean() - C64::new(1.0, 0.0)).norm() < 1e-14);
        let a = fg.get(ModeIndex::new(0, 0, 2)).unwrap()[0];
        assert!((a - C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        let p = GevreyParams::isotropic(0.1, 1.6);
        let (l, r) = check_banach_algebra(&f, &f, &p, Family::Isotropic, false).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let n2 = |k: f64| (1.0 + k.powf(3.2)) * (0.2 * k).exp();
        let expect = (1.0 + 0.5 * n2(2.0 * k)).sqrt() / n2(k);
        assert!((l / r - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn scaling_is_exact() {
        assert!(scaling_invariance(3, &sp(10)).unwrap() < 1e-12);
    }

    #[test]
    fn banach_sup_grows_slowly() {
        let s = SweepParams { r: 1.6, ..sp(200) };
        let rep = stability(Estimate::BanachIsotropic, &[4, 6], &s, 0.1).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn rejects_small_r() {
        let [f, g, h] = zero_triple(2);
        assert!(check_lemma_a1(&f, &g, &h, 0.1, 2.0).is_err());
        assert!(check_banach_algebra(&ScalarField::zeros(2), &ScalarField::zeros(2), &GevreyParams::isotropic(0.0, 1.5), Family::Isotropic, false).is_err());
    }
}

