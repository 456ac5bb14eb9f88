//! Acceptance gate: one PASS/FAIL line per criterion at the pinned
//! tolerances. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use spe_core::config::{SimConfig, DEFAULT_C_CAL};
use spe_core::dynamics::{radius_schedule, CutoffSpec, Dynamics, Mode, PhysicsParams, QMethod};
use spe_core::ensemble::{run_ensemble, run_trajectories, summarize};
use spe_core::output::fmt_f64;
use spe_core::stochastic::{NoiseKind, NoiseModel, RunSetup, Trajectory};
use spe_core::verify::invariants;
use spe_core::verify::lemmas::{scaling_invariance, stability, Estimate, SweepParams};
use spe_core::verify::sampling::{Envelope, FieldSampler};
use spe_core::verify::suite::{consistency_sweep, reference_setup, uniqueness_sweep};
use spe_core::verify::{energy_budget, perturbation_direction, smoothing_trace, uniqueness_experiment};
use spe_core::Result;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn c1_orthogonality() -> Result<Outcome> {
    let r = invariants::orthogonality(&[4, 8], 200, SEED)?;
    outcome(r.pass, format!("worst |<Q(V,V),V>| / (1e-10 ||V||^2 ||V||) = {} over {} fields", fmt_f64(r.worst), r.samples))
}

fn c2_oracle() -> Result<Outcome> {
    let r = invariants::oracle(4, 100, SEED)?;
    outcome(r.pass, format!("max |Q_pseudo - Q_direct| / 1e-10 = {} over {} pairs at N=4", fmt_f64(r.worst), r.samples))
}

fn c3_sandwich() -> Result<Outcome> {
    let r = invariants::sandwich(1000, SEED)?;
    outcome(r.pass, format!("worst relative excess / 1e-12 = {} over {} fields", fmt_f64(r.worst), r.samples))
}

fn c4_poincare() -> Result<Outcome> {
    let r = invariants::poincare(&[1, 2, 4], 1000, SEED)?;
    outcome(r.pass, format!("worst lhs/rhs = {} over {} fields", fmt_f64(r.worst), r.samples))
}

fn c5_lemmas() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for est in Estimate::ALL {
        let r = if matches!(est, Estimate::LemmaA1 | Estimate::LemmaA2) { 2.6 } else { 1.6 };
        let sp = SweepParams { tau: 0.1, gamma: 0.05, r, samples: 500, seed: SEED };
        let s = stability(est, &[3, 4], &sp, 0.15)?;
        pass &= s.pass;
        parts.push(format!(
            "{} {:.6}->{:.6} ({:.2e})",
            s.name,
            s.reports[0].worst_ratio,
            s.reports[1].worst_ratio,
            s.max_relative_change
        ));
    }
    let sp = SweepParams { tau: 0.1, gamma: 0.05, r: 2.6, samples: 200, seed: SEED };
    let scale = scaling_invariance(4, &sp)?;
    pass &= scale <= 1e-12;
    parts.push(format!("scaling {scale:.2e}"));
    outcome(pass, parts.join("; "))
}

fn c6_schedules() -> Result<Outcome> {
    let r = invariants::schedules()?;
    outcome(r.pass, format!("{} parameter sets: {}", r.samples, r.detail))
}

fn c7_uniqueness() -> Result<Outcome> {
    let u = uniqueness_sweep(50, SEED)?;
    let mut pass = u.worst_equal == 0.0 && u.least_distinct > 0.0;
    // deterministic runs: the perturbed difference must follow a fitted
    // exponential envelope
    let mut worst_r2: f64 = 1.0;
    for mode in [Mode::Inviscid, Mode::Viscous] {
        let setup = reference_setup(mode, 1.0, NoiseModel::none())?;
        for s in 0..5 {
            let v0 = FieldSampler::new(0.6, 1.0).vector(3, SEED + s, true);
            let v0 = v0.scaled(0.5 / setup.dynamics.active_norm(&v0, 0.0)?);
            let dir = perturbation_direction(3);
            let dir = dir.scaled(1.0 / setup.dynamics.active_norm(&dir, 0.0)?);
            let rep = uniqueness_experiment(&setup, &v0, &dir, 1e-6, s)?;
            worst_r2 = worst_r2.min(rep.fit_r_squared);
        }
    }
    pass &= worst_r2 >= 0.9;
    outcome(
        pass,
        format!(
            "{} equal-data runs, max sup diff {}; min perturbed diff {}; min envelope R^2 {:.4}",
            u.runs,
            fmt_f64(u.worst_equal),
            fmt_f64(u.least_distinct),
            worst_r2
        ),
    )
}

fn c8_formulations() -> Result<Outcome> {
    let c = consistency_sweep(20, SEED)?;
    let lo = c.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.ratios.iter().copied().fold(0.0, f64::max);
    outcome(
        c.worst_halving_defect <= 0.3 && c.worst_error_over_dt.is_finite(),
        format!(
            "{} configs: error <= {:.4e} dt; error(dt/2)/error(dt) in [{lo:.4}, {hi:.4}]",
            c.configs, c.worst_error_over_dt
        ),
    )
}

fn viscous_setup(order_noise: NoiseModel) -> Result<RunSetup> {
    let (tau0, rho, nu) = (0.5, 1.0, 0.5);
    let dynamics = Dynamics {
        mode: Mode::Viscous,
        physics: PhysicsParams::viscous(1.0, nu),
        cutoff: CutoffSpec::new(rho)?,
        schedule: radius_schedule(Mode::Viscous, tau0, rho, DEFAULT_C_CAL, nu)?,
        r: 2.6,
        q_method: QMethod::Pseudospectral,
    };
    let dt = dynamics.schedule.t_max / 200.0;
    Ok(RunSetup::new(dynamics, order_noise, dt))
}

fn c9_smoothing() -> Result<Outcome> {
    let setup = viscous_setup(NoiseModel::uniform(NoiseKind::Multiplicative, 8, 0.3))?;
    let t_max = setup.dynamics.schedule.t_max;
    let sampler = FieldSampler::with_envelope(Envelope::HorizontalAnalytic { mu: 0.8, q: 4.0 });
    let v0 = sampler.vector(6, SEED, true);
    let v0 = v0.scaled(0.2 / setup.dynamics.active_norm(&v0, 0.0)?);
    let mut good = 0;
    let n = 32;
    for s in 0..n {
        let tr = smoothing_trace(&setup, &v0, SEED + s as u64, 0.1)?;
        if tr.positive && tr.nondecreasing {
            good += 1;
        }
    }
    let frac = good as f64 / n as f64;
    outcome(
        t_max >= 0.1 && frac >= 0.9,
        format!("T = {t_max:.4}; {good}/{n} trajectories positive at t=0.1 and nondecreasing on [0.1, T]"),
    )
}

const ENERGY_CFG: &str = r#"
mode = "inviscid"
order = 4
tau0 = 0.5
rho = 2.0
r = 2.6
p = 4.0
ensemble_size = 64
master_seed = 11

[physics]
f0 = 1.0

[noise]
kind = "multiplicative"
m_w = 8
strength = 0.3

[ic]
kind = "random_analytic"
mu = 1.0
q = 1.0
norm = 0.5
"#;

fn c10_energy() -> Result<Outcome> {
    let cfg = SimConfig::parse(ENERGY_CFG, Vec::new())?;
    let setup = cfg.run_setup()?;
    let mut cs = Vec::new();
    for n in [4, 6, 8] {
        let v0 = cfg.initial_state(n)?;
        let runs = run_trajectories(&setup, &v0, cfg.master_seed, cfg.ensemble_size, None);
        let ok = runs.into_iter().collect::<Result<Vec<Trajectory>>>()?;
        cs.push(energy_budget(&ok, cfg.p, setup.t_end)?.c_emp);
    }
    let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cs.iter().copied().fold(0.0, f64::max);
    outcome(
        lo > 0.0 && hi / lo <= 2.0,
        format!("C_emp at N=4,6,8: {:.6}, {:.6}, {:.6}; max/min {:.4}", cs[0], cs[1], cs[2], hi / lo),
    )
}

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        out.push((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?));
    }
    out.sort();
    Ok(out)
}

fn c11_determinism() -> Result<Outcome> {
    let text = ENERGY_CFG.replace("ensemble_size = 64", "ensemble_size = 8\nsnapshot_cadence = 50");
    let cfg = SimConfig::parse(&text, Vec::new())?;
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let sa = run_ensemble(&cfg, &text, a.path())?;
    let sb = run_ensemble(&cfg, &text, b.path())?;
    let fa = files(a.path())?;
    let fb = files(b.path())?;
    let same = fa == fb && sa == sb;
    // the in-memory summary must not depend on persistence either
    let setup = cfg.run_setup()?;
    let runs = run_trajectories(&setup, &cfg.initial_state(cfg.order)?, cfg.master_seed, cfg.ensemble_size, None);
    let sc = summarize(&setup, cfg.master_seed, cfg.p, &runs)?;
    outcome(
        same && sc == sa,
        format!("{} files compared byte for byte, {} bytes", fa.len(), fa.iter().map(|f| f.1.len()).sum::<usize>()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("energy orthogonality", c1_orthogonality),
        ("oracle equivalence", c2_oracle),
        ("norm sandwich", c3_sandwich),
        ("poincare", c4_poincare),
        ("lemma stability", c5_lemmas),
        ("radius schedules", c6_schedules),
        ("pathwise uniqueness", c7_uniqueness),
        ("formulation consistency", c8_formulations),
        ("viscous smoothing", c9_smoothing),
        ("energy budget", c10_energy),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    }
}
