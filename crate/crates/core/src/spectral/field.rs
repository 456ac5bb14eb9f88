use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;

use super::modes::{ModeIndex, ModeSet};
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tolerance used when checking membership in D0 (`k' . V_hat = 0` on the
/// `m3 = 0` plane).
pub const D0_TOLERANCE: f64 = 1e-10;

/// Coefficients of a `C`-component field in the even-in-`z` basis
///
/// ```text
/// phi_k = sqrt(2) exp(i k'.x') cos(k3 z)   (k3 != 0)
/// phi_k = exp(i k'.x')                     (k3 == 0)
/// ```
///
/// on the unit torus, truncated to the ball `|m| <= order`. The basis is
/// orthonormal in `L2(T3)`, so the `L2` norm of the field is the Euclidean
/// norm of the stored coefficients, and Gevrey weights (which depend on
/// `|k3|` only) apply per stored mode.
///
/// A real field satisfies `a(-m1,-m2,m3) = conj(a(m1,m2,m3))`. Every
/// operation in this crate that starts from a real field returns a real
/// field with that identity holding exactly.
#[derive(Clone)]
pub struct SpectralField<const C: usize> {
    modes: Arc<ModeSet>,
    coeffs: Vec<[C64; C]>,
}

/// Horizontal velocity `V = (u, v)`.
pub type VectorField = SpectralField<2>;
/// Scalar field in the cosine basis.
pub type ScalarField = SpectralField<1>;

impl<const C: usize> std::fmt::Debug for SpectralField<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nonzero: Vec<_> = self
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, a)| a.iter().any(|c| *c != ZERO))
            .map(|(m, a)| ((m.m1, m.m2, m.m3), a))
            .collect();
        f.debug_struct("SpectralField")
            .field("order", &self.order())
            .field("nonzero", &nonzero)
            .finish()
    }
}

impl<const C: usize> PartialEq for SpectralField<C> {
    fn eq(&self, other: &Self) -> bool {
        self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl<const C: usize> SpectralField<C> {
    pub fn zeros(order: usize) -> Self {
        let modes = ModeSet::shared(order);
        let coeffs = vec![[ZERO; C]; modes.len()];
        Self { modes, coeffs }
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(ModeIndex) -> [C64; C]) -> Self {
        let modes = ModeSet::shared(order);
        let coeffs = modes.modes().iter().map(|m| f(*m)).collect();
        Self { modes, coeffs }
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<[C64; C]>) -> Result<Self> {
        let modes = ModeSet::shared(order);
        if coeffs.len() != modes.len() {
            return Err(Error::InvalidArgument(format!(
                "order {order} has {} modes, got {} coefficients",
                modes.len(),
                coeffs.len()
            )));
        }
        Ok(Self { modes, coeffs })
    }

    pub fn order(&self) -> usize {
        self.modes.order()
    }

    pub fn mode_set(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn modes(&self) -> &[ModeIndex] {
        self.modes.modes()
    }

    pub fn coeffs(&self) -> &[[C64; C]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[C64; C]] {
        &mut self.coeffs
    }

    pub fn get(&self, m: ModeIndex) -> Option<[C64; C]> {
        self.modes.index_of(m).map(|i| self.coeffs[i])
    }

    /// Sets the coefficient at `m` and the conjugate coefficient at its
    /// partner, keeping the field real. On the `m' = 0` line only the real
    /// part is kept.
    pub fn set_real_mode(&mut self, m: ModeIndex, value: [C64; C]) -> Result<()> {
        let i = self
            .modes
            .index_of(m)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {m:?} outside order {}", self.order())))?;
        let p = self.modes.partner_index(i);
        if p == i {
            self.coeffs[i] = value.map(|c| C64::new(c.re, 0.0));
        } else {
            self.coeffs[i] = value;
            self.coeffs[p] = value.map(|c| c.conj());
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| *c == ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |a(m) - conj(a(partner(m)))|`; zero for a real field.
    pub fn reality_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let p = self.modes.partner_index(i);
                (0..C)
                    .map(|c| (self.coeffs[i][c] - self.coeffs[p][c].conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Overwrites the non-canonical half with conjugates of the canonical
    /// half, which makes the field exactly real.
    pub fn mirror_from_canonical(&mut self) {
        for i in 0..self.coeffs.len() {
            let m = self.modes.mode(i);
            if !m.is_canonical() {
                continue;
            }
            let p = self.modes.partner_index(i);
            if p == i {
                for c in self.coeffs[i].iter_mut() {
                    c.im = 0.0;
                }
            } else {
                self.coeffs[p] = self.coeffs[i].map(|c| c.conj());
            }
        }
    }

    /// Same field represented at another truncation order: zero-padded when
    /// growing, truncated to the smaller ball when shrinking.
    pub fn resized(&self, order: usize) -> Self {
        if order == self.order() {
            return self.clone();
        }
        let mut out = Self::zeros(order);
        for (i, m) in out.modes.clone().modes().iter().enumerate() {
            if let Some(j) = self.modes.index_of(*m) {
                out.coeffs[i] = self.coeffs[j];
            }
        }
        out
    }

    /// Galerkin projection `P_N'`: zeroes every mode with `|m| > cutoff`.
    /// Cutoffs at or above the field order return the field unchanged.
    pub fn project_pn(&self, cutoff: i64) -> Result<Self> {
        if cutoff < 0 {
            return Err(Error::InvalidArgument(format!("projection order {cutoff} < 0")));
        }
        let r2 = cutoff.saturating_mul(cutoff);
        let mut out = self.clone();
        for (m, a) in self.modes().iter().zip(out.coeffs.iter_mut()) {
            if m.norm_sq() > r2 {
                *a = [ZERO; C];
            }
        }
        Ok(out)
    }

    /// Real `L2` inner product `sum_m Re(a_m . conj(b_m))`, which equals
    /// `int f . g dx` for real fields.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.order(), other.order(), "inner product across orders");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (0..C).map(|c| (a[c] * b[c].conj()).re).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq_weighted(|_| 1.0).sqrt()
    }

    /// `sum_m w(m) |a_m|^2`, summed in storage order.
    pub fn norm_sq_weighted(&self, w: impl Fn(&ModeIndex) -> f64) -> f64 {
        self.modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, a)| w(m) * a.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in self.coeffs.iter_mut().flatten() {
            *c *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.order(), other.order(), "axpy across orders");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for c in 0..C {
                a[c] += b[c] * alpha;
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Multiplies every coefficient by a real per-mode factor.
    pub fn map_diagonal(&mut self, w: impl Fn(&ModeIndex) -> f64) {
        let modes = self.modes.clone();
        for (m, a) in modes.modes().iter().zip(self.coeffs.iter_mut()) {
            let f = w(m);
            for c in a.iter_mut() {
                *c *= f;
            }
        }
    }
}

impl VectorField {
    /// `V_perp = (-v, u)`.
    pub fn perp(&self) -> Self {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = [-a[1], a[0]];
        }
        out
    }

    /// Largest `|k'.V_hat| / |k'|` over the `m3 = 0`, `m' != 0` modes. Zero
    /// exactly when the field has vanishing vertical mean of `div V`.
    pub fn d0_defect(&self) -> f64 {
        self.modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(m, _)| m.m3 == 0 && !m.is_horizontal_mean())
            .map(|(m, a)| {
                let (k1, k2) = (m.m1 as f64, m.m2 as f64);
                (a[0] * k1 + a[1] * k2).norm() / (k1 * k1 + k2 * k2).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn in_d0(&self) -> bool {
        self.d0_defect() <= D0_TOLERANCE * self.max_abs().max(1.0)
    }

    /// Orthogonal projection onto D0: on every `m3 = 0`, `m' != 0` mode the
    /// component of `V_hat` along `k'` is removed. This is also the discrete
    /// elimination of the barotropic pressure gradient. The spatial mean is
    /// left untouched.
    pub fn project_d0(&self) -> Self {
        let mut out = self.clone();
        for (m, a) in self.modes().iter().zip(out.coeffs.iter_mut()) {
            if m.m3 != 0 || m.is_horizontal_mean() {
                continue;
            }
            let (k1, k2) = (m.m1 as f64, m.m2 as f64);
            let dot = a[0] * k1 + a[1] * k2;
            // A dot product below its own rounding bound is zero at working
            // precision; leaving such modes alone makes the projection
            // exactly idempotent.
            let bound = 4.0 * f64::EPSILON * (k1.abs() * a[0].norm() + k2.abs() * a[1].norm());
            if dot.norm() <= bound {
                continue;
            }
            // Rebuild along k'^perp instead of subtracting, which avoids
            // cancellation leaving a residue above the bound.
            let s = (a[1] * k1 - a[0] * k2) / (k1 * k1 + k2 * k2);
            a[0] = -s * k2;
            a[1] = s * k1;
        }
        out
    }
}

impl ScalarField {
    pub fn constant(order: usize, value: f64) -> Self {
        let mut f = Self::zeros(order);
        let i = f.mode_set().index_of(ModeIndex::ZERO).unwrap();
        f.coeffs_mut()[i] = [C64::new(value, 0.0)];
        f
    }

    pub fn mean(&self) -> C64 {
        self.get(ModeIndex::ZERO).map(|a| a[0]).unwrap_or(ZERO)
    }
}

/// Poincare pair `(||(I-P_n)f||^2, (1/n) sum_{|k|>n} |k| |f_k|^2)` with
/// `n = 2 pi cutoff`. The inequality `lhs <= rhs` holds for every field.
pub fn poincare_check<const C: usize>(field: &SpectralField<C>, cutoff: usize) -> Result<(f64, f64)> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("Poincare cutoff must be at least 1".into()));
    }
    let r2 = (cutoff * cutoff) as i64;
    let n = 2.0 * PI * cutoff as f64;
    let lhs = field.norm_sq_weighted(|m| if m.norm_sq() > r2 { 1.0 } else { 0.0 });
    let rhs = field.norm_sq_weighted(|m| if m.norm_sq() > r2 { m.k_abs() } else { 0.0 }) / n;
    Ok((lhs, rhs))
}
