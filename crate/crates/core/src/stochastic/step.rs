use serde::{Deserialize, Serialize};

use super::noise::NoiseOperator;
use crate::dynamics::{DriftEval, Dynamics};
use crate::error::{Error, Result};
use crate::gevrey::Family;
use crate::spectral::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Evolve `V` itself.
    #[default]
    VForm,
    /// Evolve `U = exp(tau(t) A) V` (or the anisotropic weight).
    UForm,
}

/// How the U-form handles the moving weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusUpdate {
    /// Multiply by `exp(tau(t+dt)|k| - tau(t)|k|)`. Agrees with the V-form
    /// to rounding.
    #[default]
    Exact,
    /// Treat `tau' A U` as an explicit Euler term, which makes the U-form
    /// an independent first order discretization.
    Explicit,
}

/// Euler-Maruyama step with the viscous symbol integrated exactly.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub dynamics: Dynamics,
    pub noise: NoiseOperator,
    pub formulation: Formulation,
    pub radius_update: RadiusUpdate,
}

/// Exponent of the weight `U = exp(e) V` at `t`, per mode.
fn weight_exponents(dynamics: &Dynamics, order: usize, t: f64) -> Result<Vec<f64>> {
    let p = dynamics.params(t);
    let family = dynamics.mode.family();
    crate::spectral::ModeSet::shared(order)
        .modes()
        .iter()
        .map(|m| p.exponent(family, m))
        .collect()
}

/// `U = exp(tau(t) A) V` (or `exp(tau A_h + gamma A_z) V`).
pub fn to_u(v: &VectorField, t: f64, dynamics: &Dynamics) -> Result<VectorField> {
    let e = weight_exponents(dynamics, v.order(), t)?;
    Ok(scale_by(v, &e, 1.0))
}

pub fn to_v(u: &VectorField, t: f64, dynamics: &Dynamics) -> Result<VectorField> {
    let e = weight_exponents(dynamics, u.order(), t)?;
    Ok(scale_by(u, &e, -1.0))
}

fn scale_by(f: &VectorField, exponents: &[f64], sign: f64) -> VectorField {
    let mut out = f.clone();
    for (a, e) in out.coeffs_mut().iter_mut().zip(exponents) {
        let w = (sign * e).exp();
        a[0] *= w;
        a[1] *= w;
    }
    out
}

impl Stepper {
    /// Advances the state (`V` or `U` according to the formulation) from
    /// `t` to `t + dt` with Brownian increments `dw`. Returns the drift
    /// evaluation at the starting state.
    pub fn step(&self, state: &VectorField, t: f64, dt: f64, dw: &[f64]) -> Result<(VectorField, DriftEval)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be > 0")));
        }
        self.dynamics.schedule.check(t + dt)?;
        let order = state.order();
        let modes = state.mode_set().clone();
        let lin: Vec<f64> = modes.modes().iter().map(|m| (self.dynamics.linear_symbol(m) * dt).exp()).collect();

        let next = match self.formulation {
            Formulation::VForm => {
                let eval = self.dynamics.explicit_drift(state, t)?;
                let mut inc = self.noise.apply(state, dw)?;
                inc.axpy(dt, &eval.explicit);
                let mut next = state.add(&inc);
                apply_factors(&mut next, &lin);
                (next, eval)
            }
            Formulation::UForm => {
                let e0 = weight_exponents(&self.dynamics, order, t)?;
                let v = scale_by(state, &e0, -1.0);
                let eval = self.dynamics.explicit_drift(&v, t)?;
                let mut inc = self.noise.apply(&v, dw)?;
                inc.axpy(dt, &eval.explicit);
                let inc = scale_by(&inc, &e0, 1.0);
                let mut next = state.add(&inc);
                match self.radius_update {
                    RadiusUpdate::Exact => {
                        let e1 = weight_exponents(&self.dynamics, order, t + dt)?;
                        let f: Vec<f64> = lin.iter().zip(e1.iter().zip(&e0)).map(|(l, (a, b))| l * (a - b).exp()).collect();
                        apply_factors(&mut next, &f);
                    }
                    RadiusUpdate::Explicit => {
                        let tau_dot = self.dynamics.schedule.tau_rate();
                        let gamma_dot = self.dynamics.schedule.gamma_rate;
                        let family = self.dynamics.mode.family();
                        let mut drift_u = state.clone();
                        drift_u.map_diagonal(|m| match family {
                            Family::Isotropic => tau_dot * m.k_abs(),
                            Family::Anisotropic => tau_dot * m.kh_abs() + gamma_dot * m.kz_abs(),
                        });
                        next.axpy(dt, &drift_u);
                        apply_factors(&mut next, &lin);
                    }
                }
                (next, eval)
            }
        };
        if !next.0.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite coefficient after step at t = {t}")));
        }
        Ok(next)
    }

    /// The physical velocity for a state of this stepper's formulation.
    pub fn velocity(&self, state: &VectorField, t: f64) -> Result<VectorField> {
        match self.formulation {
            Formulation::VForm => Ok(state.clone()),
            Formulation::UForm => to_v(state, t, &self.dynamics),
        }
    }

    pub fn state_from_velocity(&self, v: &VectorField, t: f64) -> Result<VectorField> {
        match self.formulation {
            Formulation::VForm => Ok(v.clone()),
            Formulation::UForm => to_u(v, t, &self.dynamics),
        }
    }
}

fn apply_factors(f: &mut VectorField, factors: &[f64]) {
    for (a, w) in f.coeffs_mut().iter_mut().zip(factors) {
        a[0] *= *w;
        a[1] *= *w;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCheck {
    Continue,
    EtaHit,
}

/// `EtaHit` once the active norm reaches `rho / 2` (inclusive).
pub fn check_stopping(active_norm: f64, rho: f64) -> StopCheck {
    if active_norm >= 0.5 * rho {
        StopCheck::EtaHit
    } else {
        StopCheck::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{radius_schedule, CutoffSpec, Mode, PhysicsParams, QMethod};
    use crate::spectral::{ModeIndex, C64};
    use crate::stochastic::NoiseModel;
    use crate::verify::sampling::FieldSampler;

    fn stepper(mode: Mode, physics: PhysicsParams, formulation: Formulation) -> Stepper {
        let nu = physics.nu_z;
        Stepper {
            dynamics: Dynamics {
                mode,
                physics,
                cutoff: CutoffSpec::new(10.0).unwrap(),
                schedule: radius_schedule(mode, 0.5, 10.0, 0.01, nu).unwrap(),
                r: 2.6,
                q_method: QMethod::Pseudospectral,
            },
            noise: NoiseModel::none().at_order(3),
            formulation,
            radius_update: RadiusUpdate::Exact,
        }
    }

    #[test]
    fn nothing_moves_without_forces() {
        let s = stepper(Mode::Inviscid, PhysicsParams::inviscid(0.0), Formulation::VForm);
        let mut v = VectorField::zeros(3);
        v.set_real_mode(ModeIndex::new(0, 0, 1), [C64::new(1e-3, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let (next, _) = s.step(&v, 0.0, 1e-3, &[]).unwrap();
        assert_eq!(next, v);
    }

    #[test]
    fn viscous_decay_is_exact() {
        let nu = 0.4;
        let s = stepper(Mode::Viscous, PhysicsParams::viscous(0.0, nu), Formulation::VForm);
        let m = ModeIndex::new(0, 0, 1);
        let mut v = VectorField::zeros(3);
        v.set_real_mode(m, [C64::new(1e-3, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let dt = 1e-2;
        let (next, _) = s.step(&v, 0.0, dt, &[]).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        assert_eq!(next.get(m).unwrap()[0].re, 1e-3 * (-nu * k * k * dt).exp());
    }

    #[test]
    fn coriolis_rotation() {
        let f0 = 2.0;
        let s = stepper(Mode::Inviscid, PhysicsParams::inviscid(f0), Formulation::VForm);
        let m = ModeIndex::new(0, 0, 1);
        let mut v0 = VectorField::zeros(3);
        v0.set_real_mode(m, [C64::new(1e-3, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let t_end = 0.5 * s.dynamics.schedule.t_max;
        let err = |n: usize| {
            let dt = t_end / n as f64;
            let mut v = v0.clone();
            for i in 0..n {
                v = s.step(&v, i as f64 * dt, dt, &[]).unwrap().0;
            }
            let a = v.get(m).unwrap();
            let (c, sn) = ((f0 * t_end).cos(), (f0 * t_end).sin());
            ((a[0].re - 1e-3 * c).powi(2) + (a[1].re + 1e-3 * sn).powi(2)).sqrt()
        };
        let (e1, e2) = (err(200), err(400));
        assert!(e1 < 1e-3 * f0 * f0 * t_end * t_end / 200.0 * 2.0, "{e1}");
        assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
    }

    #[test]
    fn exact_u_form_matches_v_form() {
        let sv = stepper(Mode::Viscous, PhysicsParams::viscous(0.7, 0.3), Formulation::VForm);
        let mut su = sv.clone();
        su.formulation = Formulation::UForm;
        let v = FieldSampler::new(0.6, 1.0).vector(3, 4, true).scaled(0.05);
        let dt = sv.dynamics.schedule.t_max / 10.0;
        let (mut a, mut b) = (v.clone(), to_u(&v, 0.0, &sv.dynamics).unwrap());
        for i in 0..10 {
            let t = i as f64 * dt;
            a = sv.step(&a, t, dt, &[]).unwrap().0;
            b = su.step(&b, t, dt, &[]).unwrap().0;
        }
        let t = 10.0 * dt;
        let diff = to_u(&a, t, &sv.dynamics).unwrap().sub(&b).l2_norm();
        assert!(diff < 1e-13 * b.l2_norm(), "{diff}");
    }

    #[test]
    fn stopping_boundary_is_inclusive() {
        assert_eq!(check_stopping(0.49, 1.0), StopCheck::Continue);
        assert_eq!(check_stopping(0.5, 1.0), StopCheck::EtaHit);
    }

    #[test]
    fn steps_past_horizon_fail() {
        let s = stepper(Mode::Inviscid, PhysicsParams::inviscid(0.0), Formulation::VForm);
        let t = s.dynamics.schedule.t_max;
        assert!(matches!(s.step(&VectorField::zeros(3), t, 0.1 * t, &[]), Err(Error::Horizon { .. })));
    }
}
