use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::step::{check_stopping, Formulation, RadiusUpdate, StopCheck, Stepper};
use super::wiener::{NoiseSource, RngNoise};
use crate::dynamics::{Dynamics, Mode};
use crate::error::{Error, Result};
use crate::gevrey::{norm, weighted_norm, Family, NormKind, SpectralMultiplier};
use crate::spectral::VectorField;

/// One line of the trajectory record stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub tau: f64,
    pub gamma: f64,
    pub l2: f64,
    /// Active full norm.
    pub gevrey: f64,
    /// `||A^r E V||` with `E` the active exponential weight.
    pub seminorm: f64,
    pub theta: f64,
    pub stopped: bool,
    /// Squared dissipation seminorm of the energy estimate; in memory only.
    #[serde(skip)]
    pub dissipation_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HorizonT,
    StoppingTimeEta,
    Overflow,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub stop_reason: StopReason,
    pub eta: Option<f64>,
    pub seed: u64,
    /// Velocity at the last record.
    pub final_state: VectorField,
}

/// Everything a single run needs apart from the initial state and noise.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub dynamics: Dynamics,
    pub noise: NoiseModel,
    /// Requested step; the effective step divides `t_end` evenly.
    pub dt: f64,
    /// End of the run, at most the schedule horizon.
    pub t_end: f64,
    pub formulation: Formulation,
    pub radius_update: RadiusUpdate,
    /// Halt at the first time the active norm reaches `rho / 2`.
    pub stop_at_eta: bool,
}

impl RunSetup {
    pub fn new(dynamics: Dynamics, noise: NoiseModel, dt: f64) -> Self {
        let t_end = dynamics.schedule.t_max;
        Self {
            dynamics,
            noise,
            dt,
            t_end,
            formulation: Formulation::VForm,
            radius_update: RadiusUpdate::Exact,
            stop_at_eta: true,
        }
    }

    /// `ceil(t_end / dt)`, ignoring a relative excess below `1e-9` so a
    /// step that divides `t_end` up to rounding is kept.
    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt * (1.0 - 1e-9)).ceil() as usize).max(1)
    }

    pub fn dt_eff(&self) -> f64 {
        self.t_end / self.n_steps() as f64
    }

    /// Time of grid point `n`; the last one is `t_end` exactly.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.n_steps() {
            self.t_end
        } else {
            n as f64 * self.dt_eff()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_end > 0.0) || self.t_end > self.dynamics.schedule.t_max {
            return Err(Error::Config(format!(
                "run end {} must lie in (0, T = {}]",
                self.t_end, self.dynamics.schedule.t_max
            )));
        }
        self.noise.admissible_in(self.dynamics.mode)
    }
}

/// Squared dissipation seminorm for the energy estimate: `||A^(r+1/2) E V||^2`
/// (inviscid) or `nu_z ||d_z V||^2_{tau,r,gamma,r} + ||A_h^(1/2) A^r E V||^2`
/// (viscous).
pub fn dissipation_sq(v: &VectorField, t: f64, dynamics: &Dynamics) -> Result<f64> {
    let p = dynamics.params(t);
    match dynamics.mode {
        Mode::Inviscid => Ok(norm(v, &p.shifted(0.5, 0.5), Family::Isotropic, NormKind::Seminorm)?.powi(2)),
        Mode::Viscous => {
            let dz = crate::gevrey::apply_multiplier(v, SpectralMultiplier::PowZ { a: 1.0 })?;
            let vert = norm(&dz, &p, Family::Anisotropic, NormKind::Full)?.powi(2);
            let r2 = 2.0 * p.r;
            let horiz = weighted_norm(v, &p, Family::Anisotropic, |m| m.kh_abs() * m.k_abs().powf(r2))?.powi(2);
            Ok(dynamics.physics.nu_z * vert + horiz)
        }
    }
}

fn record(v: &VectorField, t: f64, dynamics: &Dynamics) -> Result<StepRecord> {
    let n = dynamics.norms(v, t)?;
    Ok(StepRecord {
        t,
        tau: dynamics.schedule.tau(t),
        gamma: dynamics.schedule.gamma(t),
        l2: n.l2,
        gevrey: n.gevrey,
        seminorm: n.seminorm,
        theta: dynamics.cutoff.theta(n.gevrey),
        stopped: false,
        dissipation_sq: dissipation_sq(v, t, dynamics)?,
    })
}

/// Runs one trajectory driven by `source`, calling `observe(step, t, V)` at
/// every recorded state (step 0 is the initial state).
pub fn simulate_with(
    setup: &RunSetup,
    v0: &VectorField,
    source: &mut dyn NoiseSource,
    seed: u64,
    observe: &mut dyn FnMut(usize, f64, &VectorField) -> Result<()>,
) -> Result<Trajectory> {
    setup.validate()?;
    if !v0.in_d0() {
        return Err(Error::ContractViolation("initial state is not in D0".into()));
    }
    let dynamics = &setup.dynamics;
    let rho = dynamics.cutoff.rho;
    let stepper = Stepper {
        dynamics: dynamics.clone(),
        noise: setup.noise.at_order(v0.order()),
        formulation: setup.formulation,
        radius_update: setup.radius_update,
    };
    let n_steps = setup.n_steps();
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut v = v0.clone();
    let mut state = stepper.state_from_velocity(&v, 0.0)?;
    let mut eta = None;
    let mut stop_reason = StopReason::HorizonT;

    for n in 0..=n_steps {
        let t = setup.time(n);
        if n > 0 {
            let dt = t - setup.time(n - 1);
            let dw = source.next_increment(dt)?;
            match stepper.step(&state, setup.time(n - 1), dt, &dw) {
                Ok((next, _)) => state = next,
                Err(Error::ContractViolation(_)) | Err(Error::RadiusTooLarge { .. }) => {
                    stop_reason = StopReason::Overflow;
                    break;
                }
                Err(e) => return Err(e),
            }
            v = stepper.velocity(&state, t)?;
        }
        let mut rec = match record(&v, t, dynamics) {
            Ok(r) if r.gevrey.is_finite() => r,
            Ok(_) | Err(Error::RadiusTooLarge { .. }) => {
                stop_reason = StopReason::Overflow;
                break;
            }
            Err(e) => return Err(e),
        };
        let hit = eta.is_none() && check_stopping(rec.gevrey, rho) == StopCheck::EtaHit;
        if hit {
            eta = Some(t);
            rec.stopped = true;
        }
        observe(n, t, &v)?;
        records.push(rec);
        if hit && setup.stop_at_eta {
            stop_reason = StopReason::StoppingTimeEta;
            break;
        }
    }
    Ok(Trajectory {
        records,
        stop_reason,
        eta,
        seed,
        final_state: v,
    })
}

/// Runs one trajectory with Wiener increments drawn from `rng`.
pub fn simulate(setup: &RunSetup, v0: &VectorField, rng: ChaCha8Rng, seed: u64) -> Result<Trajectory> {
    let mut source = RngNoise::new(rng, setup.noise.m_w());
    simulate_with(setup, v0, &mut source, seed, &mut |_, _, _| Ok(()))
}
