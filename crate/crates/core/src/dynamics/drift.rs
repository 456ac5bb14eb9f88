use serde::{Deserialize, Serialize};

use super::cutoff::CutoffSpec;
use super::nonlinear::{nonlinear_q, QMethod};
use super::schedule::{Mode, RadiusSchedule};
use crate::error::{Error, Result};
use crate::gevrey::{norm, GevreyParams, NormKind};
use crate::spectral::{ModeIndex, VectorField};

/// Time-independent body force together with its declared analytic radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub field: VectorField,
    pub tau0_f: f64,
    /// Vertical radius of the force; only checked in viscous runs.
    pub gamma_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    pub f0: f64,
    pub nu_z: f64,
    pub nu_h: f64,
    pub forcing: Option<ForcingSpec>,
}

impl PhysicsParams {
    pub fn inviscid(f0: f64) -> Self {
        Self {
            f0,
            nu_z: 0.0,
            nu_h: 0.0,
            forcing: None,
        }
    }

    pub fn viscous(f0: f64, nu_z: f64) -> Self {
        Self {
            nu_z,
            ..Self::inviscid(f0)
        }
    }
}

/// Everything needed to evaluate the drift of the modified Galerkin system.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub mode: Mode,
    pub physics: PhysicsParams,
    pub cutoff: CutoffSpec,
    pub schedule: RadiusSchedule,
    pub r: f64,
    pub q_method: QMethod,
}

/// The non-diagonal part of the drift at one state.
#[derive(Debug, Clone)]
pub struct DriftEval {
    /// `P_D0(-theta Q(V, V) - f0 V_perp - f)`
    pub explicit: VectorField,
    pub theta: f64,
    pub active_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSnapshot {
    pub l2: f64,
    pub gevrey: f64,
    pub seminorm: f64,
}

impl Dynamics {
    pub fn params(&self, t: f64) -> GevreyParams {
        self.schedule.params(t, self.r)
    }

    /// `||V||_{tau(t),r}` or `||V||_{tau(t),r,gamma(t),r}`.
    pub fn active_norm(&self, v: &VectorField, t: f64) -> Result<f64> {
        norm(v, &self.params(t), self.mode.family(), NormKind::Full)
    }

    pub fn norms(&self, v: &VectorField, t: f64) -> Result<NormSnapshot> {
        let p = self.params(t);
        let fam = self.mode.family();
        Ok(NormSnapshot {
            l2: v.l2_norm(),
            gevrey: norm(v, &p, fam, NormKind::Full)?,
            seminorm: norm(v, &p, fam, NormKind::Seminorm)?,
        })
    }

    /// Symbol of the viscous operator `nu_z d_zz + nu_h Lap`.
    pub fn linear_symbol(&self, m: &ModeIndex) -> f64 {
        let kz = m.kz_abs();
        let kh = m.kh_abs();
        -self.physics.nu_z * kz * kz - self.physics.nu_h * kh * kh
    }

    pub fn explicit_drift(&self, v: &VectorField, t: f64) -> Result<DriftEval> {
        self.schedule.check(t)?;
        let active_norm = self.active_norm(v, t)?;
        let theta = self.cutoff.theta(active_norm);
        let mut out = v.perp().scaled(-self.physics.f0);
        if theta > 0.0 {
            let q = nonlinear_q(v, v, self.q_method)?;
            out.axpy(-theta, &q);
        }
        if let Some(forcing) = &self.physics.forcing {
            if forcing.field.order() == v.order() {
                out.axpy(-1.0, &forcing.field);
            } else {
                out.axpy(-1.0, &forcing.field.resized(v.order()));
            }
        }
        Ok(DriftEval {
            explicit: out.project_d0(),
            theta,
            active_norm,
        })
    }

    pub fn drift(&self, v: &VectorField, t: f64) -> Result<VectorField> {
        let mut out = self.explicit_drift(v, t)?.explicit;
        let mut lin = v.clone();
        lin.map_diagonal(|m| self.linear_symbol(m));
        out.axpy(1.0, &lin);
        Ok(out)
    }
}

/// Full drift `P_D0(-theta Q(V,V) - f0 V_perp - f + nu_z d_zz V + nu_h Lap V)`.
pub fn drift(v: &VectorField, t: f64, dynamics: &Dynamics) -> Result<VectorField> {
    if !v.in_d0() {
        return Err(Error::ContractViolation("drift needs V in D0".into()));
    }
    dynamics.drift(v, t)
}
