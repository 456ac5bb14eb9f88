//! Pathwise experiments: uniqueness, Galerkin self-convergence, V-form
//! against U-form, and vertical smoothing.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gevrey::{fit_line, fit_vertical_decay, norm, vertical_spectrum_decay, NormKind};
use crate::par::*;
use crate::spectral::{ModeIndex, VectorField, C64};
use crate::stochastic::{simulate_with, to_u, trajectory_rng, BrownianPath, Formulation, RadiusUpdate, RngNoise, RunSetup, Trajectory};

/// A run that also keeps the velocity at every record.
pub struct Observed {
    pub trajectory: Trajectory,
    pub states: Vec<VectorField>,
}

pub fn observe_run(setup: &RunSetup, v0: &VectorField, source: &mut dyn crate::stochastic::NoiseSource, seed: u64) -> Result<Observed> {
    let mut states = Vec::new();
    let trajectory = simulate_with(setup, v0, source, seed, &mut |_, _, v| {
        states.push(v.clone());
        Ok(())
    })?;
    Ok(Observed { trajectory, states })
}

fn run_seeded(setup: &RunSetup, v0: &VectorField, seed: u64) -> Result<Observed> {
    let mut source = RngNoise::new(trajectory_rng(seed, 0), setup.noise.m_w());
    observe_run(setup, v0, &mut source, seed)
}

/// Unit perturbation in the highest of a few fixed modes that fits the
/// order, in the first velocity component.
pub fn perturbation_direction(order: usize) -> VectorField {
    let mut f = VectorField::zeros(order);
    for m in [ModeIndex::new(2, 1, 1), ModeIndex::new(1, 0, 1), ModeIndex::new(0, 0, 1)] {
        if f.mode_set().index_of(m).is_some() {
            f.set_real_mode(m, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).expect("mode is stored");
            return f;
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub seed: u64,
    /// Equal initial data, same noise: must be exactly zero.
    pub sup_diff_equal_ic: f64,
    /// `sup ||V1 - V2||_active` up to `eta1 ^ eta2 ^ T` for perturbed data.
    pub sup_diff_distinct_ic: f64,
    pub sup_l2_diff_distinct_ic: f64,
    pub initial_diff: f64,
    pub eta_pair: (Option<f64>, Option<f64>),
    /// Log-linear fit of the active-norm difference against time.
    pub growth_rate: f64,
    pub fit_r_squared: f64,
    pub steps_compared: usize,
}

/// Runs the same noise path from `v0` twice and from `v0 + eps * perturb`.
pub fn uniqueness_experiment(setup: &RunSetup, v0: &VectorField, perturb: &VectorField, eps: f64, seed: u64) -> Result<UniquenessReport> {
    let a = run_seeded(setup, v0, seed)?;
    let b = run_seeded(setup, v0, seed)?;
    let v1 = v0.add(&perturb.scaled(eps)).project_d0();
    let c = run_seeded(setup, &v1, seed)?;

    let dyn_ = &setup.dynamics;
    let mut equal: f64 = 0.0;
    for (x, y) in a.states.iter().zip(&b.states) {
        if x != y {
            equal = equal.max(x.sub(y).l2_norm().max(f64::MIN_POSITIVE));
        }
    }
    if a.states.len() != b.states.len() {
        equal = f64::INFINITY;
    }

    let n = a.states.len().min(c.states.len());
    let mut sup: f64 = 0.0;
    let mut sup_l2: f64 = 0.0;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let t = a.trajectory.records[i].t;
        let d = a.states[i].sub(&c.states[i]);
        let dn = norm(&d, &dyn_.params(t), dyn_.mode.family(), NormKind::Full)?;
        sup = sup.max(dn);
        sup_l2 = sup_l2.max(d.l2_norm());
        if dn > 0.0 {
            points.push((t, dn.ln()));
        }
    }
    let fit = fit_line(&points);
    Ok(UniquenessReport {
        seed,
        sup_diff_equal_ic: equal,
        sup_diff_distinct_ic: sup,
        sup_l2_diff_distinct_ic: sup_l2,
        initial_diff: v1.sub(v0).l2_norm(),
        eta_pair: (a.trajectory.eta, c.trajectory.eta),
        growth_rate: fit.map_or(0.0, |f| f.slope),
        fit_r_squared: fit.map_or(0.0, |f| f.r_squared),
        steps_compared: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub order: usize,
    /// `sup_t ||V_N - V_ref||_active`
    pub sup_diff: f64,
    pub sup_l2_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference_order: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Differences are non-increasing in `N`.
    pub monotone: bool,
}

/// Runs every level on one Brownian path and compares each to the finest.
/// `ic(N)` supplies the initial state at order `N`.
pub fn galerkin_convergence(
    setup: &RunSetup,
    ic: &(dyn Fn(usize) -> Result<VectorField> + Sync),
    levels: &[usize],
    seed: u64,
) -> Result<ConvergenceReport> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let finest = *levels.last().ok_or_else(|| crate::Error::InvalidArgument("no levels".into()))?;
    let mut setup = setup.clone();
    setup.stop_at_eta = false;
    let mut rng = trajectory_rng(seed, 0);
    let path = BrownianPath::sample(setup.noise.m_w(), setup.dt_eff(), setup.n_steps(), &mut rng)?;

    let runs: Vec<Result<Observed>> = par_iter!(levels)
        .map(|&n| observe_run(&setup, &ic(n)?, &mut path.source(), seed))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = runs.last().expect("at least one level");
    let dyn_ = &setup.dynamics;
    let mut rows = Vec::new();
    for (&n, run) in levels.iter().zip(&runs) {
        let mut sup: f64 = 0.0;
        let mut sup_l2: f64 = 0.0;
        for (i, (x, y)) in run.states.iter().zip(&reference.states).enumerate() {
            let t = reference.trajectory.records[i].t;
            let d = x.resized(finest).sub(y);
            sup = sup.max(norm(&d, &dyn_.params(t), dyn_.mode.family(), NormKind::Full)?);
            sup_l2 = sup_l2.max(d.l2_norm());
        }
        rows.push(ConvergenceRow {
            order: n,
            sup_diff: sup,
            sup_l2_diff: sup_l2,
        });
    }
    let monotone = rows.windows(2).all(|w| w[0].sup_diff >= w[1].sup_diff);
    Ok(ConvergenceReport {
        reference_order: finest,
        rows,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub dt: f64,
    /// `sup_t ||E(t) V_vform(t) - U_uform(t)||` at `dt` and `dt / 2`.
    pub error_dt: f64,
    pub error_half: f64,
    /// `error_half / error_dt`; first order means about one half.
    pub ratio: f64,
}

/// Compares the V-form with the explicit-radius U-form on one Brownian path,
/// at `dt` and at `dt / 2` (the coarse path is the fine one coarsened).
pub fn formulation_consistency(setup: &RunSetup, v0: &VectorField, seed: u64) -> Result<ConsistencyReport> {
    let mut base = setup.clone();
    base.stop_at_eta = false;
    let n = base.n_steps();
    let mut fine = base.clone();
    fine.dt = base.t_end / (2 * n) as f64;
    let mut coarse = base.clone();
    coarse.dt = base.t_end / n as f64;
    let mut rng = trajectory_rng(seed, 0);
    let path = BrownianPath::sample(base.noise.m_w(), fine.dt_eff(), fine.n_steps(), &mut rng)?;
    let coarse_path = path.coarsen();

    let error = |s: &RunSetup, p: &BrownianPath| -> Result<f64> {
        let mut sv = s.clone();
        sv.formulation = Formulation::VForm;
        let mut su = s.clone();
        su.formulation = Formulation::UForm;
        su.radius_update = RadiusUpdate::Explicit;
        let a = observe_run(&sv, v0, &mut p.source(), seed)?;
        let b = observe_run(&su, v0, &mut p.source(), seed)?;
        let mut worst: f64 = 0.0;
        for (i, (x, y)) in a.states.iter().zip(&b.states).enumerate() {
            let t = a.trajectory.records[i].t;
            let d = to_u(x, t, &s.dynamics)?.sub(&to_u(y, t, &s.dynamics)?);
            worst = worst.max(d.l2_norm());
        }
        Ok(worst)
    };
    let error_dt = error(&coarse, &coarse_path)?;
    let error_half = error(&fine, &path)?;
    Ok(ConsistencyReport {
        dt: coarse.dt_eff(),
        error_dt,
        error_half,
        ratio: if error_dt == 0.0 { 0.0 } else { error_half / error_dt },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTrace {
    pub seed: u64,
    /// `(t, fitted vertical decay rate)` for records with `t >= t_start`.
    pub rates: Vec<(f64, f64)>,
    pub positive: bool,
    pub nondecreasing: bool,
}

/// The buckets `m3 = 1, 2`. Under `exp(-nu k3^2 t)` the higher buckets sink
/// to the rounding floor of the transforms within a fraction of the horizon,
/// and a fit through floored points flattens; `m3 = 0` has no vertical
/// structure at all.
fn resolved_window(spectrum: &[(f64, f64)]) -> Vec<(f64, f64)> {
    spectrum.iter().skip(1).take(2).copied().collect()
}

/// Fitted vertical decay rates of one trajectory from `t_start` on.
pub fn smoothing_trace(setup: &RunSetup, v0: &VectorField, seed: u64, t_start: f64) -> Result<SmoothingTrace> {
    let mut setup = setup.clone();
    setup.stop_at_eta = false;
    let run = run_seeded(&setup, v0, seed)?;
    let rates: Vec<(f64, f64)> = run
        .trajectory
        .records
        .iter()
        .zip(&run.states)
        .filter(|(r, _)| r.t >= t_start)
        .map(|(r, v)| (r.t, fit_vertical_decay(&resolved_window(&vertical_spectrum_decay(v))).unwrap_or(f64::NAN)))
        .collect();
    let positive = rates.first().is_some_and(|(_, g)| *g > 0.0);
    let nondecreasing = rates.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12 * w[0].1.abs());
    Ok(SmoothingTrace {
        seed,
        rates,
        positive,
        nondecreasing,
    })
}
