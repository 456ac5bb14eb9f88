use std::sync::Arc;

use super::field::{VectorField, C64, ZERO};
use super::modes::ModeSet;
use crate::error::{Error, Result};

/// Scalar field odd in `z`, stored in the `sqrt(2) exp(i k'.x') sin(k3 z)`
/// basis. Coefficients on the `m3 = 0` plane are always zero.
#[derive(Debug, Clone)]
pub struct SineField {
    modes: Arc<ModeSet>,
    coeffs: Vec<C64>,
}

impl PartialEq for SineField {
    fn eq(&self, other: &Self) -> bool {
        self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl SineField {
    pub fn order(&self) -> usize {
        self.modes.order()
    }

    pub fn mode_set(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Value at a point by direct summation.
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let mut s = ZERO;
        for (m, b) in self.modes.modes().iter().zip(&self.coeffs) {
            if m.m3 == 0 {
                continue;
            }
            let [k1, k2] = m.kh();
            let kz = m.kz_abs();
            s += b * C64::from_polar(std::f64::consts::SQRT_2 * (kz * x[2]).sin(), k1 * x[0] + k2 * x[1]);
        }
        s.re
    }
}

/// Diagnostic vertical velocity `w = -int_0^z div V dz'`.
///
/// On a mode with `m3 != 0` the cosine coefficient `V_hat` integrates to the
/// sine coefficient `-i (k'.V_hat) / k3`. The `m3 = 0` plane would produce a
/// secular term `z * div V`, which is exactly what membership in D0 rules out.
pub fn vertical_velocity(v: &VectorField) -> Result<SineField> {
    let defect = v.d0_defect();
    if defect > super::field::D0_TOLERANCE * v.max_abs().max(1.0) {
        return Err(Error::ContractViolation(format!(
            "vertical velocity needs V in D0, mean divergence defect {defect:.3e}"
        )));
    }
    let modes = v.mode_set().clone();
    let coeffs = modes
        .modes()
        .iter()
        .zip(v.coeffs())
        .map(|(m, a)| {
            if m.m3 == 0 {
                return ZERO;
            }
            let [k1, k2] = m.kh();
            let div = a[0] * k1 + a[1] * k2;
            C64::new(0.0, -1.0) * div / m.kz_abs()
        })
        .collect();
    Ok(SineField { modes, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModeIndex;
    use crate::verify::sampling::FieldSampler;
    use std::f64::consts::PI;

    #[test]
    fn horizontally_uniform_velocity_has_no_w() {
        let mut v = VectorField::zeros(3);
        v.set_real_mode(ModeIndex::new(0, 0, 2), [C64::new(1.0, 0.0), C64::new(-0.5, 0.0)])
            .unwrap();
        v.set_real_mode(ModeIndex::new(0, 0, 0), [C64::new(0.3, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        assert!(vertical_velocity(&v).unwrap().is_zero());
    }

    #[test]
    fn single_mode_antiderivative() {
        // V = sqrt(2) cos(2 pi z) e^{2 pi i x1} e1 (+ conjugate)
        let mut v = VectorField::zeros(2);
        v.set_real_mode(ModeIndex::new(1, 0, 1), [C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let w = vertical_velocity(&v).unwrap();
        let i = w.mode_set().index_of(ModeIndex::new(1, 0, 1)).unwrap();
        assert!((w.coeffs()[i] - C64::new(0.0, -1.0)).norm() < 1e-15);
        let j = w.mode_set().index_of(ModeIndex::new(-1, 0, 1)).unwrap();
        assert!((w.coeffs()[j] - C64::new(0.0, 1.0)).norm() < 1e-15);
        // w = 2 sqrt(2) sin(2 pi z) sin(2 pi x1)
        let x = [0.1, 0.7, 0.2];
        let expect = 2.0 * 2f64.sqrt() * (2.0 * PI * x[2]).sin() * (2.0 * PI * x[0]).sin();
        assert!((w.eval(x) - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_fields_outside_d0() {
        let mut v = VectorField::zeros(2);
        v.set_real_mode(ModeIndex::new(1, 0, 0), [C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        assert!(matches!(vertical_velocity(&v), Err(Error::ContractViolation(_))));
    }

    /// Pointwise divergence of V by direct summation.
    fn div_direct(v: &VectorField, x: [f64; 3]) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for (m, a) in v.modes().iter().zip(v.coeffs()) {
            let [k1, k2] = m.kh();
            let z = if m.m3 == 0 {
                1.0
            } else {
                2f64.sqrt() * (m.kz_abs() * x[2]).cos()
            };
            s += C64::new(0.0, 1.0) * (a[0] * k1 + a[1] * k2) * C64::from_polar(z, k1 * x[0] + k2 * x[1]);
        }
        s.re
    }

    #[test]
    fn matches_trapezoid_quadrature() {
        let s = FieldSampler::new(0.1, 0.5);
        let levels = 64;
        for seed in 0..5 {
            let v = s.vector(4, seed, true);
            let w = vertical_velocity(&v).unwrap();
            for &(x1, x2) in &[(0.13, 0.71), (0.5, 0.25)] {
                // composite trapezoid on a fine sub-grid, sampled at 64 levels
                let sub = 1024;
                let h = 1.0 / (levels * sub) as f64;
                let mut acc = 0.0;
                let mut prev = div_direct(&v, [x1, x2, 0.0]);
                let mut max_err: f64 = 0.0;
                for step in 1..=levels * sub {
                    let z = step as f64 * h;
                    let cur = div_direct(&v, [x1, x2, z]);
                    acc += 0.5 * h * (prev + cur);
                    prev = cur;
                    if step % sub == 0 {
                        max_err = max_err.max((-acc - w.eval([x1, x2, z])).abs());
                    }
                }
                assert!(max_err < 1e-8, "seed {seed}: {max_err}");
            }
            // odd in z, hence nothing on the m3 = 0 plane
            for (m, b) in w.mode_set().modes().iter().zip(w.coeffs()) {
                if m.m3 == 0 {
                    assert_eq!(*b, C64::new(0.0, 0.0));
                }
            }
        }
    }
}
