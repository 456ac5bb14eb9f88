//! The verifier suite: every estimate and invariant check behind one TOML
//! document, with a hard/soft split deciding the exit status.
//!
//! Hard checks are the ones whose failure means the implementation is
//! wrong: the norm and cutoff sandwiches, orthogonality, Poincare, bitwise
//! uniqueness for equal data and first-order agreement of the two
//! formulations. Everything else is reported but only advisory.

use serde::{Deserialize, Serialize};

use super::experiments::{formulation_consistency, perturbation_direction, uniqueness_experiment};
use super::invariants::{self, InvariantReport};
use super::lemmas::{scaling_invariance, stability, Estimate, SweepParams};
use super::sampling::FieldSampler;
use crate::dynamics::{radius_schedule, CutoffSpec, Dynamics, Mode, PhysicsParams, QMethod};
use crate::error::{Error, Result};
use crate::gevrey::GevreyParams;
use crate::output::{Cell, Csv};
use crate::par::*;
use crate::spectral::VectorField;
use crate::stochastic::{verify_noise_conditions, NoiseKind, NoiseModel, RunSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    #[default]
    Smooth,
    /// `theta = 1` everywhere; violates the sandwich on purpose.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Orders of the lemma stability sweeps, ascending.
    pub orders: Vec<usize>,
    /// Samples per order of each lemma sweep.
    pub samples: usize,
    pub tau: f64,
    pub gamma: f64,
    pub r: f64,
    /// Regularity of the product estimates (needs `r > 3/2`).
    pub banach_r: f64,
    pub stability_tolerance: f64,
    pub orthogonality_orders: Vec<usize>,
    pub orthogonality_samples: usize,
    pub oracle_order: usize,
    pub oracle_samples: usize,
    pub sandwich_samples: usize,
    pub poincare_cutoffs: Vec<usize>,
    pub poincare_samples: usize,
    pub uniqueness_seeds: usize,
    pub consistency_configs: usize,
    pub noise_samples: usize,
    pub cutoff_profile: CutoffProfile,
    /// Names of the checks to run; empty runs all of them.
    pub checks: Vec<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            orders: vec![3, 4],
            samples: 500,
            tau: 0.1,
            gamma: 0.05,
            r: 2.6,
            banach_r: 1.6,
            stability_tolerance: 0.15,
            orthogonality_orders: vec![4, 8],
            orthogonality_samples: 200,
            oracle_order: 4,
            oracle_samples: 100,
            sandwich_samples: 1000,
            poincare_cutoffs: vec![1, 2, 4],
            poincare_samples: 1000,
            uniqueness_seeds: 50,
            consistency_configs: 20,
            noise_samples: 200,
            cutoff_profile: CutoffProfile::Smooth,
            checks: Vec::new(),
        }
    }
}

pub const CHECKS: [&str; 15] = [
    "orthogonality",
    "oracle",
    "sandwich",
    "cutoff_sandwich",
    "poincare",
    "schedule",
    "lemma_a1",
    "lemma_a2",
    "banach_iso",
    "banach_iso_seminorm",
    "banach_aniso",
    "banach_aniso_seminorm",
    "scaling",
    "uniqueness_equal_ic",
    "formulation_consistency",
];

const HARD: [&str; 6] = [
    "sandwich",
    "cutoff_sandwich",
    "orthogonality",
    "poincare",
    "uniqueness_equal_ic",
    "formulation_consistency",
];

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for name in &c.checks {
            if !CHECKS.contains(&name.as_str()) && name != "noise" {
                return Err(Error::Config(format!("unknown check `{name}`; known: {}, noise", CHECKS.join(", "))));
            }
        }
        if c.orders.is_empty() || c.orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("orders must be nonempty and ascending".into()));
        }
        if c.r <= 2.0 || c.banach_r <= 1.5 {
            return Err(Error::Config(format!("need r > 2 and banach_r > 3/2, got {} and {}", c.r, c.banach_r)));
        }
        Ok(c)
    }

    fn selected(&self, name: &str) -> bool {
        if self.checks.is_empty() {
            // the noise check is opt-in
            name != "noise"
        } else {
            self.checks.iter().any(|c| c == name)
        }
    }

    fn sweep(&self, r: f64) -> SweepParams {
        SweepParams {
            tau: self.tau,
            gamma: self.gamma,
            r,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

/// One line of the suite table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub hard: bool,
    /// Largest order involved, 0 when not applicable.
    pub order: usize,
    pub samples: usize,
    pub worst_ratio: f64,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    /// Names of the failed hard checks.
    pub failed_hard: Vec<String>,
    pub failed_soft: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    /// `name, N, samples, worst_ratio, pass`.
    pub fn csv(&self) -> String {
        let mut c = Csv::new(&["name", "N", "samples", "worst_ratio", "pass", "hard"]);
        for r in &self.checks {
            c.row(&[
                Cell::S(&r.name),
                Cell::U(r.order as u64),
                Cell::U(r.samples as u64),
                Cell::F(r.worst_ratio),
                Cell::B(r.pass),
                Cell::B(r.hard),
            ]);
        }
        c.finish()
    }
}

/// A small reference setup used by the pathwise checks: `rho = 2`,
/// `tau0 = 0.5`, `C = 0.5`, `r = 2.6`, 40 steps over the full horizon.
pub fn reference_setup(mode: Mode, f0: f64, noise: NoiseModel) -> Result<RunSetup> {
    let nu = if mode == Mode::Viscous { 0.5 } else { 0.0 };
    let physics = match mode {
        Mode::Viscous => PhysicsParams::viscous(f0, nu),
        Mode::Inviscid => PhysicsParams::inviscid(f0),
    };
    let dynamics = Dynamics {
        mode,
        physics,
        cutoff: CutoffSpec::new(2.0)?,
        schedule: radius_schedule(mode, 0.5, 2.0, 0.5, nu)?,
        r: 2.6,
        q_method: QMethod::Pseudospectral,
    };
    let dt = dynamics.schedule.t_max / 40.0;
    Ok(RunSetup::new(dynamics, noise, dt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSweep {
    pub runs: usize,
    /// Largest equal-data difference; must be exactly zero.
    pub worst_equal: f64,
    /// Smallest distinct-data difference; must be positive.
    pub least_distinct: f64,
}

/// Equal data and data offset by `1e-6` in the active norm, for `seeds`
/// seeds in both modes at order 3, multiplicative noise.
pub fn uniqueness_sweep(seeds: usize, seed0: u64) -> Result<UniquenessSweep> {
    let jobs: Vec<(Mode, u64)> = [Mode::Inviscid, Mode::Viscous]
        .iter()
        .flat_map(|&m| (0..seeds as u64).map(move |s| (m, seed0.wrapping_add(s))))
        .collect();
    let reports: Vec<Result<(f64, f64)>> = par_iter!(jobs)
        .map(|&(mode, s)| {
            let setup = reference_setup(mode, 1.0, NoiseModel::uniform(NoiseKind::Multiplicative, 4, 0.3))?;
            let v0 = FieldSampler::new(0.6, 1.0).vector(3, s, true);
            let v0 = v0.scaled(0.5 / setup.dynamics.active_norm(&v0, 0.0)?);
            // unit active norm, so the 1e-6 offset stays far below rho / 2
            let dir = perturbation_direction(3);
            let dir = dir.scaled(1.0 / setup.dynamics.active_norm(&dir, 0.0)?);
            let rep = uniqueness_experiment(&setup, &v0, &dir, 1e-6, s)?;
            if rep.eta_pair.0 == Some(0.0) || rep.eta_pair.1 == Some(0.0) {
                return Err(Error::ContractViolation(format!("seed {s}: data start at rho / 2")));
            }
            Ok((rep.sup_diff_equal_ic, rep.sup_diff_distinct_ic))
        })
        .collect();
    let mut worst_equal: f64 = 0.0;
    let mut least = f64::INFINITY;
    for r in reports {
        let (e, d) = r?;
        worst_equal = worst_equal.max(e);
        least = least.min(d);
    }
    Ok(UniquenessSweep {
        runs: jobs.len(),
        worst_equal,
        least_distinct: least,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySweep {
    pub configs: usize,
    /// Largest `error(dt) / dt`.
    pub worst_error_over_dt: f64,
    /// Halving ratios `error(dt/2) / error(dt)`.
    pub ratios: Vec<f64>,
    /// Largest `|2 ratio - 1|`.
    pub worst_halving_defect: f64,
}

/// Config `i` of the consistency sweep at order 4: the mode alternates,
/// the noise kind cycles, the rotation is on for half of them.
pub fn consistency_config(i: usize) -> Result<(RunSetup, VectorField)> {
    let mode = if i % 2 == 0 { Mode::Inviscid } else { Mode::Viscous };
    let kind = match (i / 2) % 3 {
        0 => NoiseKind::Multiplicative,
        1 => NoiseKind::HalfDerivative,
        _ => NoiseKind::Additive,
    };
    let strength = if kind == NoiseKind::Additive { 0.02 } else { 0.3 };
    let f0 = if (i / 6) % 2 == 0 { 1.0 } else { 0.0 };
    let mut setup = reference_setup(mode, f0, NoiseModel::uniform(kind, 4, strength))?;
    setup.t_end = 0.5 * setup.dynamics.schedule.t_max;
    let v0 = FieldSampler::new(0.6, 1.0).vector(4, 100 + i as u64, true);
    let v0 = v0.scaled(0.5 / setup.dynamics.active_norm(&v0, 0.0)?);
    Ok((setup, v0))
}

pub fn consistency_sweep(configs: usize, seed0: u64) -> Result<ConsistencySweep> {
    let idx: Vec<usize> = (0..configs).collect();
    let reps: Vec<Result<(f64, f64)>> = par_iter!(idx)
        .map(|&i| {
            let (setup, v0) = consistency_config(i)?;
            let rep = formulation_consistency(&setup, &v0, seed0.wrapping_add(i as u64))?;
            Ok((rep.error_dt / rep.dt, rep.ratio))
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for r in reps {
        let (e, q) = r?;
        worst = worst.max(e);
        ratios.push(q);
    }
    let defect = ratios.iter().map(|q| (2.0 * q - 1.0).abs()).fold(0.0, f64::max);
    Ok(ConsistencySweep {
        configs,
        worst_error_over_dt: worst,
        ratios,
        worst_halving_defect: defect,
    })
}

fn from_invariant(r: InvariantReport, order: usize) -> CheckResult {
    CheckResult {
        hard: false,
        order,
        samples: r.samples,
        worst_ratio: r.worst,
        pass: r.pass,
        detail: r.detail,
        name: r.name,
        seconds: 0.0,
    }
}

fn run_check(cfg: &SuiteConfig, name: &str) -> Result<CheckResult> {
    let top = |v: &[usize]| v.iter().copied().max().unwrap_or(0);
    let res = match name {
        "orthogonality" => from_invariant(
            invariants::orthogonality(&cfg.orthogonality_orders, cfg.orthogonality_samples, cfg.seed)?,
            top(&cfg.orthogonality_orders),
        ),
        "oracle" => from_invariant(invariants::oracle(cfg.oracle_order, cfg.oracle_samples, cfg.seed)?, cfg.oracle_order),
        "sandwich" => from_invariant(invariants::sandwich(cfg.sandwich_samples, cfg.seed)?, 6),
        "cutoff_sandwich" => {
            let theta: Box<dyn Fn(f64, f64) -> f64> = match cfg.cutoff_profile {
                CutoffProfile::Smooth => Box::new(|x, rho| CutoffSpec { rho }.theta(x)),
                CutoffProfile::Identity => Box::new(|_, _| 1.0),
            };
            let mut r = from_invariant(invariants::cutoff_profile(&*theta, 2.0, 10_000), 0);
            r.name = "cutoff_sandwich".into();
            r
        }
        "poincare" => from_invariant(
            invariants::poincare(&cfg.poincare_cutoffs, cfg.poincare_samples, cfg.seed)?,
            2 * top(&cfg.poincare_cutoffs),
        ),
        "schedule" => from_invariant(invariants::schedules()?, 0),
        "scaling" => {
            let mut sp = cfg.sweep(cfg.r);
            sp.samples = sp.samples.min(100);
            let w = scaling_invariance(top(&cfg.orders), &sp)?;
            CheckResult {
                name: name.into(),
                hard: false,
                order: top(&cfg.orders),
                samples: sp.samples,
                worst_ratio: w / 1e-12,
                pass: w <= 1e-12,
                detail: format!("max relative change of the trilinear ratio under rescaling: {w:.3e}"),
                seconds: 0.0,
            }
        }
        "uniqueness_equal_ic" => {
            let u = uniqueness_sweep(cfg.uniqueness_seeds, cfg.seed)?;
            CheckResult {
                name: name.into(),
                hard: false,
                order: 3,
                samples: u.runs,
                worst_ratio: u.worst_equal,
                pass: u.worst_equal == 0.0 && u.least_distinct > 0.0,
                detail: format!(
                    "equal data: max sup difference {:e}; perturbed data: min sup difference {:e}",
                    u.worst_equal, u.least_distinct
                ),
                seconds: 0.0,
            }
        }
        "formulation_consistency" => {
            let c = consistency_sweep(cfg.consistency_configs, cfg.seed)?;
            CheckResult {
                name: name.into(),
                hard: false,
                order: 4,
                samples: c.configs,
                worst_ratio: c.worst_halving_defect / 0.3,
                pass: c.worst_halving_defect <= 0.3,
                detail: format!(
                    "max error/dt {:.4e}; halving ratios in [{:.4}, {:.4}]",
                    c.worst_error_over_dt,
                    c.ratios.iter().copied().fold(f64::INFINITY, f64::min),
                    c.ratios.iter().copied().fold(0.0, f64::max)
                ),
                seconds: 0.0,
            }
        }
        "noise" => {
            let p = GevreyParams::isotropic(cfg.tau, cfg.r);
            let mut worst: f64 = 0.0;
            let mut detail = Vec::new();
            for kind in [NoiseKind::Additive, NoiseKind::Multiplicative, NoiseKind::HalfDerivative] {
                let m = NoiseModel::uniform(kind, 8, 0.5);
                let rep = verify_noise_conditions(&m, top(&cfg.orders), &p, crate::gevrey::Family::Isotropic, cfg.noise_samples, cfg.seed)?;
                worst = worst.max(rep.growth_c).max(rep.lipschitz_c);
                detail.push(format!("{kind:?}: growth {:.3e} lipschitz {:.3e}", rep.growth_c, rep.lipschitz_c));
            }
            CheckResult {
                name: name.into(),
                hard: false,
                order: top(&cfg.orders),
                samples: cfg.noise_samples,
                worst_ratio: worst,
                pass: worst.is_finite(),
                detail: detail.join("; "),
                seconds: 0.0,
            }
        }
        other => {
            let est = Estimate::ALL
                .into_iter()
                .find(|e| e.name() == other)
                .ok_or_else(|| Error::Config(format!("unknown check `{other}`")))?;
            let r = if matches!(est, Estimate::LemmaA1 | Estimate::LemmaA2) { cfg.r } else { cfg.banach_r };
            let s = stability(est, &cfg.orders, &cfg.sweep(r), cfg.stability_tolerance)?;
            let last = s.reports.last().expect("orders nonempty");
            CheckResult {
                name: name.into(),
                hard: false,
                order: last.order,
                samples: last.samples,
                worst_ratio: last.worst_ratio,
                pass: s.pass,
                detail: format!(
                    "sups {:?}, max relative change {:.4} (tolerance {})",
                    s.reports.iter().map(|r| r.worst_ratio).collect::<Vec<_>>(),
                    s.max_relative_change,
                    s.tolerance
                ),
                seconds: 0.0,
            }
        }
    };
    Ok(res)
}

/// Runs the selected checks in the fixed order of `CHECKS`. An error inside
/// a check is recorded as its failure.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let mut checks = Vec::new();
    for name in CHECKS.iter().copied().chain(["noise"]) {
        if !cfg.selected(name) {
            continue;
        }
        let start = std::time::Instant::now();
        let mut res = run_check(cfg, name).unwrap_or_else(|e| CheckResult {
            name: name.into(),
            hard: false,
            order: 0,
            samples: 0,
            worst_ratio: f64::NAN,
            pass: false,
            detail: format!("error: {e}"),
            seconds: 0.0,
        });
        res.hard = HARD.contains(&name);
        res.seconds = start.elapsed().as_secs_f64();
        checks.push(res);
    }
    let failed_hard: Vec<String> = checks.iter().filter(|c| c.hard && !c.pass).map(|c| c.name.clone()).collect();
    let failed_soft: Vec<String> = checks.iter().filter(|c| !c.hard && !c.pass).map(|c| c.name.clone()).collect();
    SuiteReport {
        pass: failed_hard.is_empty(),
        checks,
        failed_hard,
        failed_soft,
    }
}
