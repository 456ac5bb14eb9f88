//! Ensembles of independent trajectories, their persisted streams and the
//! per-time statistics.
//!
//! Trajectory `i` draws its noise from `trajectory_rng(master_seed, i)`, so
//! results do not depend on thread scheduling. Aggregation runs after all
//! workers finish, over the trajectories in index order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::output::{write_json, write_jsonl, Cell, Csv};
use crate::par::*;
use crate::spectral::{snapshot::write_snapshot, VectorField};
use crate::stochastic::{simulate_with, trajectory_rng, RngNoise, RunSetup, StopReason, Trajectory};
use crate::verify::{energy_budget, EnergyReport};

/// Gevrey-norm quantiles at one grid time over the trajectories still
/// running there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub step: usize,
    pub t: f64,
    pub alive: usize,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub index: usize,
    pub stop_reason: Option<StopReason>,
    pub eta: Option<f64>,
    pub steps: usize,
    pub final_gevrey: Option<f64>,
    /// Set when the run or its files failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub failed: usize,
    /// Fractions over the successful trajectories.
    pub fraction_stopped_eta: f64,
    pub fraction_horizon: f64,
    pub fraction_overflow: f64,
    /// Sorted stopping times of the trajectories that hit `rho / 2`.
    pub eta_values: Vec<f64>,
    pub eta_median: Option<f64>,
    pub quantiles: Vec<QuantileRow>,
    pub energy: Option<EnergyReport>,
    pub trajectories: Vec<TrajectoryEntry>,
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and nonempty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn traj_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("traj_{i}.jsonl"))
}

pub fn snap_path(dir: &Path, i: usize, step: usize) -> PathBuf {
    dir.join(format!("snap_{i}_{step}.bin"))
}

/// Where an ensemble writes its files; `None` keeps everything in memory.
#[derive(Debug, Clone, Copy)]
pub struct Persist<'a> {
    pub dir: &'a Path,
    pub snapshot_cadence: usize,
}

fn run_one(setup: &RunSetup, v0: &VectorField, master_seed: u64, i: usize, persist: Option<Persist<'_>>) -> Result<Trajectory> {
    let mut source = RngNoise::new(trajectory_rng(master_seed, i as u64), setup.noise.m_w());
    let mut observe = |step: usize, _t: f64, v: &VectorField| -> Result<()> {
        if let Some(p) = persist {
            if p.snapshot_cadence > 0 && step % p.snapshot_cadence == 0 {
                let mut w = BufWriter::new(File::create(snap_path(p.dir, i, step))?);
                write_snapshot(&mut w, v)?;
                w.flush()?;
            }
        }
        Ok(())
    };
    let traj = simulate_with(setup, v0, &mut source, master_seed, &mut observe)?;
    if let Some(p) = persist {
        let mut w = BufWriter::new(File::create(traj_path(p.dir, i))?);
        write_jsonl(&mut w, &traj.records)?;
        w.flush()?;
    }
    Ok(traj)
}

/// Runs `size` trajectories from the same initial state. Failed runs come
/// back as `Err` in their slot without stopping the others.
pub fn run_trajectories(
    setup: &RunSetup,
    v0: &VectorField,
    master_seed: u64,
    size: usize,
    persist: Option<Persist<'_>>,
) -> Vec<Result<Trajectory>> {
    let idx: Vec<usize> = (0..size).collect();
    par_iter!(idx).map(|&i| run_one(setup, v0, master_seed, i, persist)).collect()
}

/// Statistics of finished runs in index order.
pub fn summarize(setup: &RunSetup, master_seed: u64, p: f64, runs: &[Result<Trajectory>]) -> Result<EnsembleSummary> {
    let ok: Vec<&Trajectory> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let n_steps = setup.n_steps();
    let mut quantiles = Vec::new();
    for step in 0..=n_steps {
        let vals = sorted(ok.iter().filter_map(|t| t.records.get(step)).map(|r| r.gevrey).collect());
        if vals.is_empty() {
            break;
        }
        quantiles.push(QuantileRow {
            step,
            t: setup.time(step),
            alive: vals.len(),
            q10: quantile(&vals, 0.1),
            q50: quantile(&vals, 0.5),
            q90: quantile(&vals, 0.9),
        });
    }
    let eta_values = sorted(ok.iter().filter_map(|t| t.eta).collect());
    let frac = |reason: StopReason| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter(|t| t.stop_reason == reason).count() as f64 / ok.len() as f64
        }
    };
    let energy = if ok.is_empty() {
        None
    } else {
        let owned: Vec<Trajectory> = ok.iter().map(|t| (*t).clone()).collect();
        Some(energy_budget(&owned, p, setup.t_end)?)
    };
    let trajectories = runs
        .iter()
        .enumerate()
        .map(|(index, r)| match r {
            Ok(t) => TrajectoryEntry {
                index,
                stop_reason: Some(t.stop_reason),
                eta: t.eta,
                steps: t.records.len().saturating_sub(1),
                final_gevrey: t.records.last().map(|r| r.gevrey),
                error: None,
            },
            Err(e) => TrajectoryEntry {
                index,
                stop_reason: None,
                eta: None,
                steps: 0,
                final_gevrey: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(EnsembleSummary {
        ensemble_size: runs.len(),
        master_seed,
        dt: setup.dt_eff(),
        t_end: setup.t_end,
        n_steps,
        failed: runs.len() - ok.len(),
        fraction_stopped_eta: frac(StopReason::StoppingTimeEta),
        fraction_horizon: frac(StopReason::HorizonT),
        fraction_overflow: frac(StopReason::Overflow),
        eta_median: if eta_values.is_empty() { None } else { Some(quantile(&eta_values, 0.5)) },
        eta_values,
        quantiles,
        energy,
        trajectories,
    })
}

/// `summary.csv`: the quantile table.
pub fn summary_csv(s: &EnsembleSummary) -> String {
    let mut c = Csv::new(&["step", "t", "alive", "q10", "q50", "q90"]);
    for q in &s.quantiles {
        c.row(&[
            Cell::U(q.step as u64),
            Cell::F(q.t),
            Cell::U(q.alive as u64),
            Cell::F(q.q10),
            Cell::F(q.q50),
            Cell::F(q.q90),
        ]);
    }
    c.finish()
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    source: &'a str,
    resolved: &'a SimConfig,
    dt: f64,
    n_steps: usize,
    t_end: f64,
    mode_ordering: &'static str,
}

/// The full ensemble of `cfg`: writes `config.json`, `summary.json`,
/// `summary.csv`, `traj_<i>.jsonl` and the snapshots into `out`.
/// `source` is the config text as read, re-emitted for provenance.
pub fn run_ensemble(cfg: &SimConfig, source: &str, out: &Path) -> Result<EnsembleSummary> {
    let setup = cfg.run_setup()?;
    let v0 = cfg.initial_state(cfg.order)?;
    std::fs::create_dir_all(out)?;
    write_json(
        &out.join("config.json"),
        &ConfigRecord {
            source,
            resolved: cfg,
            dt: setup.dt_eff(),
            n_steps: setup.n_steps(),
            t_end: setup.t_end,
            mode_ordering: crate::spectral::MODE_ORDERING_ID,
        },
    )?;
    let persist = Persist {
        dir: out,
        snapshot_cadence: cfg.snapshot_cadence,
    };
    let runs = run_trajectories(&setup, &v0, cfg.master_seed, cfg.ensemble_size, Some(persist));
    let summary = summarize(&setup, cfg.master_seed, cfg.p, &runs)?;
    write_json(&out.join("summary.json"), &summary)?;
    std::fs::write(out.join("summary.csv"), summary_csv(&summary))?;
    if summary.failed == runs.len() {
        if let Some(Err(e)) = runs.into_iter().find(|r| r.is_err()) {
            return Err(Error::InvalidArgument(format!("every trajectory failed; first: {e}")));
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
mode = "inviscid"
order = 3
tau0 = 0.5
rho = 2.0
r = 2.6
ensemble_size = 4
master_seed = 7
horizon_fraction = 0.1

[physics]
f0 = 1.0

[noise]
kind = "multiplicative"
m_w = 4
strength = 0.3

[ic]
kind = "random_analytic"
mu = 1.0
q = 1.0
norm = 0.5
"#;

    fn cfg(extra: &[(&str, &str)]) -> SimConfig {
        SimConfig::parse(CFG, extra.iter().map(|(k, v)| (k.to_string(), v.to_string()))).unwrap()
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.1), 1.4);
        assert_eq!(quantile(&[2.5], 0.9), 2.5);
    }

    #[test]
    fn single_trajectory_quantiles_are_the_trajectory() {
        let c = cfg(&[("SPE_ENSEMBLE_SIZE", "1")]);
        let s = c.run_setup().unwrap();
        let runs = run_trajectories(&s, &c.initial_state(3).unwrap(), 7, 1, None);
        let sum = summarize(&s, 7, 4.0, &runs).unwrap();
        let t = runs[0].as_ref().unwrap();
        assert_eq!(sum.quantiles.len(), t.records.len());
        for (q, r) in sum.quantiles.iter().zip(&t.records) {
            assert_eq!((q.q10, q.q50, q.q90), (r.gevrey, r.gevrey, r.gevrey));
        }
    }

    #[test]
    fn zero_noise_runs_coincide() {
        let c = cfg(&[("SPE_NOISE__STRENGTH", "0.0")]);
        let s = c.run_setup().unwrap();
        let runs = run_trajectories(&s, &c.initial_state(3).unwrap(), 7, 4, None);
        let first = runs[0].as_ref().unwrap();
        for r in &runs[1..] {
            assert_eq!(r.as_ref().unwrap().records, first.records);
        }
        let sum = summarize(&s, 7, 4.0, &runs).unwrap();
        assert!(sum.quantiles.iter().all(|q| q.q10 == q.q90));
        assert!(sum.eta_values.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn files_repeat_byte_for_byte() {
        let c = cfg(&[("SPE_SNAPSHOT_CADENCE", "5")]);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_ensemble(&c, CFG, a.path()).unwrap();
        run_ensemble(&c, CFG, b.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.iter().any(|n| n == "snap_0_5.bin"));
        assert!(names.iter().any(|n| n == "traj_3.jsonl"));
        for n in names {
            assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
        }
    }

    #[test]
    fn io_failure_marks_every_trajectory() {
        let c = cfg(&[]);
        let s = c.run_setup().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        let p = Persist { dir: &missing, snapshot_cadence: 0 };
        let runs = run_trajectories(&s, &c.initial_state(3).unwrap(), 7, 2, Some(p));
        let sum = summarize(&s, 7, 4.0, &runs).unwrap();
        assert_eq!(sum.failed, 2);
        assert!(sum.trajectories.iter().all(|t| t.error.is_some()));
        assert!(sum.energy.is_none());
    }
}
