use std::path::Path;
use std::process::{Command, Output};

use spe_core::config::SimConfig;
use spe_core::spectral::{snapshot::read_snapshot, VectorField};

const CFG: &str = r#"
mode = "viscous"
order = 3
tau0 = 0.5
rho = 2.0
r = 2.6
ensemble_size = 3
master_seed = 5
snapshot_cadence = 10
horizon_fraction = 0.2

[physics]
f0 = 1.0
nu_z = 0.5

[noise]
kind = "vertical_transport"
m_w = 2
strength = 0.5

[ic]
kind = "random_analytic"
mu = 1.0
q = 2.0
norm = 0.4
horizontal_only = true
"#;

fn spe(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spe"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_writes_the_layout_and_repeats() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), CFG);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = spe(&["simulate", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // config.json records the output directory, everything else must match
    let la = listing(&a);
    let lb = listing(&b);
    assert_eq!(la.len(), lb.len());
    for (fa, fb) in la.iter().zip(&lb) {
        assert_eq!(fa.0, fb.0);
        if fa.0 == "config.json" {
            let ta = String::from_utf8(fa.1.clone()).unwrap().replace(a.to_str().unwrap(), "OUT");
            let tb = String::from_utf8(fb.1.clone()).unwrap().replace(b.to_str().unwrap(), "OUT");
            assert_eq!(ta, tb);
        } else {
            assert_eq!(fa.1, fb.1, "{}", fa.0);
        }
    }
    let names: Vec<&str> = la.iter().map(|(n, _)| n.as_str()).collect();
    for n in ["config.json", "summary.json", "summary.csv", "traj_0.jsonl", "traj_2.jsonl", "snap_1_10.bin"] {
        assert!(names.contains(&n), "{names:?}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&la.iter().find(|f| f.0 == "summary.json").unwrap().1).unwrap();
    assert_eq!(summary["master_seed"], 9);
    let config: serde_json::Value = serde_json::from_slice(&la.iter().find(|f| f.0 == "config.json").unwrap().1).unwrap();
    assert_eq!(config["source"], CFG);
    assert_eq!(config["resolved"]["p"], 4.0);
}

#[test]
fn snapshots_hold_the_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), CFG);
    let out = tmp.path().join("o");
    assert!(spe(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], &[]).status.success());
    let snap: VectorField = read_snapshot(std::fs::File::open(out.join("snap_0_0.bin")).unwrap()).unwrap();
    let c = SimConfig::parse(CFG, Vec::new()).unwrap();
    assert_eq!(snap, c.initial_state(3).unwrap());
    // the first JSONL record is the initial state
    let line = std::fs::read_to_string(out.join("traj_0.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    let n0 = c.dynamics().unwrap().active_norm(&snap, 0.0).unwrap();
    assert_eq!(first["gevrey"].as_f64().unwrap(), n0);
    assert_eq!(first["t"], 0.0);
}

#[test]
fn env_overrides_reach_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), CFG);
    let out = tmp.path().join("o");
    let o = spe(
        &["simulate", "--config", &cfg],
        &[("SPE_ENSEMBLE_SIZE", "2"), ("SPE_OUTPUT_DIR", out.to_str().unwrap()), ("SPE_SNAPSHOT_CADENCE", "0")],
    );
    assert!(o.status.success());
    let names: Vec<String> = listing(&out).into_iter().map(|f| f.0).collect();
    assert!(names.contains(&"traj_1.jsonl".to_string()));
    assert!(!names.contains(&"traj_2.jsonl".to_string()));
    assert!(!names.iter().any(|n| n.starts_with("snap_")));
}

#[test]
fn invalid_config_names_the_hypothesis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &CFG.replace("r = 2.6", "r = 2.0"));
    let o = spe(&["simulate", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r > 5/2"));
    let cfg = write_cfg(tmp.path(), CFG);
    let o = spe(&["simulate", "--config", &cfg], &[("SPE_M_BOUND", "2.5")]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho >= M"));
}

#[test]
fn verify_exit_status_follows_hard_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = tmp.path().join("suite.toml");
    let base = "checks = [\"cutoff_sandwich\", \"sandwich\", \"schedule\"]\nsandwich_samples = 50\n";
    std::fs::write(&suite, base).unwrap();
    let out = tmp.path().join("rep");
    let o = spe(&["verify", "--suite", suite.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("name,N,samples,worst_ratio,pass"));
    assert_eq!(csv.lines().count(), 4);

    std::fs::write(&suite, format!("{base}cutoff_profile = \"identity\"\n")).unwrap();
    let o = spe(&["verify", "--suite", suite.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cutoff_sandwich"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL cutoff_sandwich"));
}

#[test]
fn uniqueness_and_convergence_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), CFG);
    let o = spe(&["uniqueness", "--config", &cfg, "--perturb", "1e-12"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["sup_diff_equal_ic"], 0.0);
    assert!(rep["sup_diff_distinct_ic"].as_f64().unwrap() > 0.0);

    let o = spe(&["convergence", "--config", &cfg, "--levels", "2,3,4"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["reference_order"], 4);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 3);
    assert_eq!(rep["rows"][2]["sup_diff"], 0.0);
}
