//! `spe`: run ensembles, the verifier suite and the pathwise experiments.
//!
//! Config values can be overridden with `SPE_<KEY>` environment variables,
//! nested tables joined by `__` (`SPE_NOISE__STRENGTH=0.1`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spe_core::config::SimConfig;
use spe_core::ensemble::run_ensemble;
use spe_core::output::{fmt_f64, to_json_pretty, write_json};
use spe_core::verify::{galerkin_convergence, perturbation_direction, run_suite, uniqueness_experiment, SuiteConfig};
use spe_core::Result;

#[derive(Parser)]
#[command(name = "spe", version, about = "Stochastic hydrostatic Euler / Navier-Stokes in analytic spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the ensemble described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Master seed, replacing `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, replacing `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verifier suite; exits 1 when a hard check fails.
    Verify {
        #[arg(long)]
        suite: PathBuf,
        /// Directory for report.json and report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Galerkin self-convergence on one shared noise path.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        levels: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Equal and perturbed initial data on one noise path.
    Uniqueness {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        perturb: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn simulate(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExitCode> {
    let (mut cfg, text) = SimConfig::from_file(&config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let s = run_ensemble(&cfg, &text, &cfg.output_dir)?;
    println!("trajectories {} failed {}", s.ensemble_size, s.failed);
    println!("steps {} dt {} t_end {}", s.n_steps, fmt_f64(s.dt), fmt_f64(s.t_end));
    println!(
        "stopped_eta {} horizon {} overflow {}",
        fmt_f64(s.fraction_stopped_eta),
        fmt_f64(s.fraction_horizon),
        fmt_f64(s.fraction_overflow)
    );
    if let Some(e) = s.eta_median {
        println!("eta_median {}", fmt_f64(e));
    }
    if let Some(e) = &s.energy {
        println!("energy_c_emp {}", fmt_f64(e.c_emp));
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(if s.failed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn verify(suite: PathBuf, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = SuiteConfig::parse(&std::fs::read_to_string(&suite)?)?;
    let rep = run_suite(&cfg);
    for c in &rep.checks {
        println!(
            "{} {:<24} {} N={} samples={} worst={} ({:.1}s) {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            if c.hard { "hard" } else { "soft" },
            c.order,
            c.samples,
            fmt_f64(c.worst_ratio),
            c.seconds,
            c.detail
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        write_json(&dir.join("report.json"), &rep)?;
        std::fs::write(dir.join("report.csv"), rep.csv())?;
    }
    if rep.pass {
        if !rep.failed_soft.is_empty() {
            println!("soft failures: {}", rep.failed_soft.join(", "));
        }
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("hard check failed: {}", rep.failed_hard.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn convergence(config: PathBuf, levels: Vec<usize>, seed: Option<u64>) -> Result<ExitCode> {
    let (cfg, _) = SimConfig::from_file(&config)?;
    let setup = cfg.run_setup()?;
    let ic = |n: usize| cfg.initial_state(n);
    let rep = galerkin_convergence(&setup, &ic, &levels, seed.unwrap_or(cfg.master_seed))?;
    print!("{}", to_json_pretty(&rep)?);
    Ok(ExitCode::SUCCESS)
}

fn uniqueness(config: PathBuf, perturb: f64, seed: Option<u64>) -> Result<ExitCode> {
    let (cfg, _) = SimConfig::from_file(&config)?;
    let setup = cfg.run_setup()?;
    let v0 = cfg.initial_state(cfg.order)?;
    let rep = uniqueness_experiment(&setup, &v0, &perturbation_direction(cfg.order), perturb, seed.unwrap_or(cfg.master_seed))?;
    print!("{}", to_json_pretty(&rep)?);
    Ok(if rep.sup_diff_equal_ic == 0.0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Simulate { config, seed, out } => simulate(config, seed, out),
        Cmd::Verify { suite, out } => verify(suite, out),
        Cmd::Convergence { config, levels, seed } => convergence(config, levels, seed),
        Cmd::Uniqueness { config, perturb, seed } => uniqueness(config, perturb, seed),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
