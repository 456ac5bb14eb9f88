//! Simulation configuration: a TOML document, optionally patched by
//! `SPE_`-prefixed environment variables, validated against the hypotheses
//! the theory needs.
//!
//! Env overrides address keys by path, with `__` between table levels:
//! `SPE_RHO=3`, `SPE_PHYSICS__F0=0.5`, `SPE_NOISE__KIND=additive`. Values
//! are read as TOML scalars, falling back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{radius_schedule, CutoffSpec, Dynamics, ForcingSpec, Mode, PhysicsParams, QMethod};
use crate::error::{Error, Result};
use crate::gevrey::{norm, NormKind};
use crate::spectral::{snapshot::read_snapshot, ModeIndex, VectorField, C64};
use crate::stochastic::{Formulation, NoiseKind, NoiseModel, RadiusUpdate, RunSetup};
use crate::verify::sampling::FieldSampler;

pub const ENV_PREFIX: &str = "SPE_";

/// Twice the sampled sup of the inviscid trilinear ratio over 500 draws at
/// order 4 with `tau = 0.1`, `r = 2.6`, seed 1.
pub const DEFAULT_C_CAL: f64 = 0.44604972593697384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcSpec {
    /// One real mode `a phi_m + conj`, projected onto D0.
    SingleMode { mode: [i32; 3], amplitude: [f64; 2] },
    /// Random field with envelope `exp(-mu |k|) (1+|k|)^(-q)` rescaled so its
    /// norm in `D_{tau0,r}` (or the anisotropic space at `gamma = 0`) equals
    /// `norm`.
    RandomAnalytic {
        mu: f64,
        #[serde(default)]
        q: f64,
        #[serde(default)]
        seed: u64,
        norm: f64,
        /// Only the horizontal direction is analytic; `z` is Sobolev of
        /// order `q`.
        #[serde(default)]
        horizontal_only: bool,
    },
    /// A snapshot file, truncated or zero-padded to the run order.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    /// Analytic radius of the force.
    pub tau0_f: f64,
    /// Declared vertical radius; defaults to `tau0_f`.
    #[serde(default)]
    pub gamma_star: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub nu_z: f64,
    #[serde(default)]
    pub nu_h: f64,
    #[serde(default)]
    pub forcing: Option<ForcingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default = "default_m_w")]
    pub m_w: usize,
    /// `sqrt(sum alpha_k^2)` with equal coefficients; ignored when `alphas`
    /// is given.
    #[serde(default)]
    pub strength: f64,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_additive_mu")]
    pub additive_mu: f64,
}

fn default_m_w() -> usize {
    16
}

fn default_additive_mu() -> f64 {
    2.0
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        let mut m = match &self.alphas {
            Some(a) => NoiseModel {
                kind: self.kind,
                alphas: a.clone(),
                additive_mu: self.additive_mu,
            },
            None => NoiseModel::uniform(self.kind, self.m_w, self.strength),
        };
        m.additive_mu = self.additive_mu;
        m
    }
}

fn default_p() -> f64 {
    4.0
}

fn default_c_cal() -> f64 {
    DEFAULT_C_CAL
}

fn default_ensemble() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("spe_out")
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub mode: Mode,
    /// Galerkin order `N`.
    pub order: usize,
    /// Time step; the default keeps the radius loss and the noise variance
    /// per step at `1e-3`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub tau0: f64,
    pub rho: f64,
    /// Bound `M` on the initial norm; defaults to the norm of the generated
    /// initial state.
    #[serde(default)]
    pub m_bound: Option<f64>,
    pub r: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_c_cal")]
    pub c_cal: f64,
    #[serde(default)]
    pub q_method: QMethod,
    #[serde(default)]
    pub formulation: Formulation,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    pub ic: IcSpec,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    /// Write a snapshot every this many steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_cadence: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Fraction of the schedule horizon to simulate.
    #[serde(default = "one")]
    pub horizon_fraction: f64,
}

fn one() -> f64 {
    1.0
}

fn parse_env_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `SPE_A__B=value` pairs to the table. Unknown keys are inserted
/// and then rejected by the schema like any other unknown key.
pub fn apply_env_overrides(table: &mut toml::Table, env: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut pairs: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    pairs.sort();
    for (key, value) in pairs {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(|s| s.is_empty()) {
            return Err(Error::Config(format!("malformed override variable {key}")));
        }
        let mut cur = &mut *table;
        for part in &path[..path.len() - 1] {
            let entry = cur
                .entry(part.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("{key}: `{part}` is not a table")))?;
        }
        cur.insert(path[path.len() - 1].clone(), parse_env_value(&value));
    }
    Ok(())
}

impl SimConfig {
    /// Parses, applies overrides from `env` and validates.
    pub fn parse(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        apply_env_overrides(&mut table, env)?;
        let cfg: SimConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` with the process environment as overrides.
    pub fn from_file(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::parse(&text, std::env::vars())?;
        Ok((cfg, text))
    }

    fn physics(&self) -> Result<PhysicsParams> {
        let forcing = match &self.physics.forcing {
            None => None,
            Some(f) => Some(ForcingSpec {
                field: FieldSampler::new(f.tau0_f + 0.25, 2.0).vector(self.order, f.seed, true).scaled(f.amplitude),
                tau0_f: f.tau0_f,
                gamma_star: f.gamma_star.unwrap_or(f.tau0_f),
            }),
        };
        Ok(PhysicsParams {
            f0: self.physics.f0,
            nu_z: self.physics.nu_z,
            nu_h: self.physics.nu_h,
            forcing,
        })
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.as_ref().map_or_else(NoiseModel::none, NoiseConfig::model)
    }

    pub fn dynamics(&self) -> Result<Dynamics> {
        Ok(Dynamics {
            mode: self.mode,
            physics: self.physics()?,
            cutoff: CutoffSpec::new(self.rho)?,
            schedule: radius_schedule(self.mode, self.tau0, self.rho, self.c_cal, self.physics.nu_z)?,
            r: self.r,
            q_method: self.q_method,
        })
    }

    /// The default step: `growth * C_cal * dt <= 1e-3 tau0` with `growth`
    /// the schedule's `rho + 1` or `rho^2 + 1`, and `sum alpha^2 dt <= 1e-3`.
    pub fn default_dt(&self) -> f64 {
        let growth = match self.mode {
            Mode::Inviscid => self.rho + 1.0,
            Mode::Viscous => self.rho * self.rho + 1.0,
        };
        let mut dt = 1e-3 * self.tau0 / (growth * self.c_cal);
        let s = self.noise_model().sum_sq();
        if s > 0.0 {
            dt = dt.min(1e-3 / s);
        }
        dt
    }

    pub fn resolved_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.default_dt())
    }

    pub fn run_setup(&self) -> Result<RunSetup> {
        let dynamics = self.dynamics()?;
        let mut s = RunSetup::new(dynamics, self.noise_model(), self.resolved_dt());
        s.t_end = self.horizon_fraction * s.dynamics.schedule.t_max;
        s.formulation = self.formulation;
        s.radius_update = RadiusUpdate::Exact;
        Ok(s)
    }

    /// The initial state at Galerkin order `order` (usually `self.order`).
    pub fn initial_state(&self, order: usize) -> Result<VectorField> {
        let v = match &self.ic {
            IcSpec::SingleMode { mode, amplitude } => {
                let m = ModeIndex::new(mode[0], mode[1], mode[2]);
                let mut v = VectorField::zeros(order);
                if v.mode_set().index_of(m).is_some() {
                    v.set_real_mode(m, [C64::new(amplitude[0], 0.0), C64::new(amplitude[1], 0.0)])?;
                }
                v.project_d0()
            }
            IcSpec::RandomAnalytic { mu, q, seed, norm: target, horizontal_only } => {
                let env = if *horizontal_only {
                    crate::verify::sampling::Envelope::HorizontalAnalytic { mu: *mu, q: *q }
                } else {
                    crate::verify::sampling::Envelope::Isotropic { mu: *mu, q: *q }
                };
                // the scale is fixed on the configured order so every order
                // sees the same coefficients
                let reference = FieldSampler::with_envelope(env).vector(self.order, *seed, true);
                let n = self.initial_norm_of(&reference)?;
                let scale = if n > 0.0 { target / n } else { 0.0 };
                FieldSampler::with_envelope(env).vector(order, *seed, true).scaled(scale)
            }
            IcSpec::File { path } => {
                let f = std::fs::File::open(path)?;
                let v: VectorField = read_snapshot(std::io::BufReader::new(f))?;
                v.resized(order)
            }
        };
        Ok(v)
    }

    /// `||v||_{tau0,r}` or `||v||_{tau0,r,0,r}`.
    pub fn initial_norm_of(&self, v: &VectorField) -> Result<f64> {
        let s = radius_schedule(self.mode, self.tau0, self.rho, self.c_cal, self.physics.nu_z)?;
        norm(v, &s.params(0.0, self.r), self.mode.family(), NormKind::Full)
    }

    /// Checks every hypothesis; errors name the one violated.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.r <= 2.5 {
            return bad(format!("r = {} violates the hypothesis r > 5/2", self.r));
        }
        for (name, v) in [("tau0", self.tau0), ("rho", self.rho), ("c_cal", self.c_cal)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        if self.p < 2.0 {
            return bad(format!("p = {} violates p >= 2", self.p));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt = {dt} must be > 0"));
            }
        }
        if !(self.horizon_fraction > 0.0 && self.horizon_fraction <= 1.0) {
            return bad(format!("horizon_fraction = {} must lie in (0, 1]", self.horizon_fraction));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1".into());
        }
        let ph = &self.physics;
        if ph.nu_h != 0.0 {
            return bad(format!("nu_h = {} but both modes require nu_h = 0", ph.nu_h));
        }
        match self.mode {
            Mode::Inviscid if ph.nu_z != 0.0 => {
                return bad(format!("inviscid mode requires nu_z = 0, got {}", ph.nu_z));
            }
            Mode::Viscous if !(ph.nu_z > 0.0) => {
                return bad(format!("viscous mode requires nu_z > 0, got {}", ph.nu_z));
            }
            _ => {}
        }
        if let Some(f) = &ph.forcing {
            if !(f.tau0_f > self.tau0) {
                return bad(format!("forcing radius tau0_f = {} must exceed tau0 = {} (f in D_(tau0,r))", f.tau0_f, self.tau0));
            }
            let g = f.gamma_star.unwrap_or(f.tau0_f);
            if g > f.tau0_f {
                return bad(format!("gamma_star = {g} exceeds the generated radius {}", f.tau0_f));
            }
            if self.mode == Mode::Viscous && g < ph.nu_z * self.tau0 / 8.0 {
                return bad(format!(
                    "gamma_star = {g} violates gamma* >= nu_z tau0 / 8 = {}",
                    ph.nu_z * self.tau0 / 8.0
                ));
            }
        }
        if let Some(n) = &self.noise {
            let model = n.model();
            model.admissible_in(self.mode)?;
            if n.alphas.is_none() && !(n.strength >= 0.0 && n.strength.is_finite()) {
                return bad(format!("noise strength {} must be >= 0", n.strength));
            }
            if model.kind == NoiseKind::Additive && model.additive_mu <= self.tau0 {
                return bad(format!(
                    "additive noise shapes with radius {} are not in D_(tau0,r) for tau0 = {}",
                    model.additive_mu, self.tau0
                ));
            }
            if model.kind == NoiseKind::VerticalTransport {
                let limit = self.p * ph.nu_z / (8.0 * self.c_cal);
                if model.sum_sq() > limit {
                    return bad(format!(
                        "transport noise delta^2 = {} violates delta^2 <= p nu_z / (8 C) = {limit}",
                        model.sum_sq()
                    ));
                }
            }
        }
        if let IcSpec::RandomAnalytic { mu, norm: target, .. } = &self.ic {
            if !(*mu > self.tau0) {
                return bad(format!("random_analytic mu = {mu} must exceed tau0 = {} for a finite initial norm", self.tau0));
            }
            if !(*target >= 0.0) {
                return bad(format!("random_analytic norm = {target} must be >= 0"));
            }
        }
        let v0 = self.initial_state(self.order)?;
        let n0 = self.initial_norm_of(&v0)?;
        let m = self.m_bound.unwrap_or(n0);
        if self.rho < m {
            return bad(format!("rho = {} < M = {m} violates the hypothesis rho >= M", self.rho));
        }
        if n0 > m * (1.0 + 1e-12) {
            return bad(format!("initial norm {n0} exceeds the declared bound M = {m}"));
        }
        if n0 >= 0.5 * self.rho {
            return bad(format!(
                "initial norm {n0} >= rho/2 = {} would give eta = 0; eta > 0 needs the initial norm below rho/2",
                0.5 * self.rho
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mode = "inviscid"
order = 3
tau0 = 0.5
rho = 2.0
r = 2.6

[physics]
f0 = 1.0

[ic]
kind = "random_analytic"
mu = 1.0
q = 1.0
norm = 0.5
"#;

    fn parse(text: &str) -> Result<SimConfig> {
        SimConfig::parse(text, Vec::new())
    }

    fn with(extra: &[(&str, &str)]) -> Result<SimConfig> {
        SimConfig::parse(MINIMAL, extra.iter().map(|(k, v)| (k.to_string(), v.to_string())))
    }

    fn msg(r: Result<SimConfig>) -> String {
        match r {
            Err(e) => e.to_string(),
            Ok(_) => panic!("accepted"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.p, 4.0);
        assert_eq!(c.c_cal, DEFAULT_C_CAL);
        assert_eq!(c.ensemble_size, 1);
        assert_eq!(c.q_method, QMethod::Pseudospectral);
        let s = c.run_setup().unwrap();
        assert_eq!(s.n_steps(), 500);
        let v0 = c.initial_state(3).unwrap();
        assert!((c.initial_norm_of(&v0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn r_must_exceed_five_halves() {
        assert!(with(&[("SPE_R", "2.7")]).is_ok());
        assert!(msg(with(&[("SPE_R", "2.0")])).contains("r > 5/2"));
    }

    #[test]
    fn rho_must_dominate_m() {
        assert!(with(&[("SPE_M_BOUND", "1.5")]).is_ok());
        assert!(msg(with(&[("SPE_M_BOUND", "3.0")])).contains("rho >= M"));
    }

    #[test]
    fn initial_norm_below_half_rho() {
        assert!(with(&[("SPE_IC__NORM", "0.9")]).is_ok());
        assert!(msg(with(&[("SPE_IC__NORM", "1.2")])).contains("eta > 0"));
        assert!(msg(with(&[("SPE_IC__NORM", "0.9"), ("SPE_M_BOUND", "0.8")])).contains("exceeds the declared bound"));
    }

    #[test]
    fn viscosity_pairs() {
        assert!(with(&[("SPE_MODE", "viscous"), ("SPE_PHYSICS__NU_Z", "0.5")]).is_ok());
        assert!(msg(with(&[("SPE_MODE", "viscous")])).contains("nu_z > 0"));
        assert!(msg(with(&[("SPE_PHYSICS__NU_Z", "0.5")])).contains("inviscid mode requires nu_z = 0"));
        assert!(msg(with(&[("SPE_PHYSICS__NU_H", "0.1")])).contains("nu_h"));
    }

    #[test]
    fn forcing_radius_pairs() {
        let ok = [
            ("SPE_MODE", "viscous"),
            ("SPE_PHYSICS__NU_Z", "0.8"),
            ("SPE_PHYSICS__FORCING__AMPLITUDE", "0.01"),
            ("SPE_PHYSICS__FORCING__TAU0_F", "1.0"),
        ];
        assert!(with(&ok).is_ok());
        let mut low = ok.to_vec();
        low.push(("SPE_PHYSICS__FORCING__GAMMA_STAR", "0.04"));
        assert!(msg(with(&low)).contains("gamma* >= nu_z tau0 / 8"));
        assert!(msg(with(&[("SPE_PHYSICS__FORCING__AMPLITUDE", "0.01"), ("SPE_PHYSICS__FORCING__TAU0_F", "0.4")])).contains("tau0_f"));
    }

    #[test]
    fn transport_noise_pairs() {
        let base = [("SPE_MODE", "viscous"), ("SPE_PHYSICS__NU_Z", "0.5"), ("SPE_NOISE__KIND", "vertical_transport")];
        let mut ok = base.to_vec();
        ok.push(("SPE_NOISE__STRENGTH", "0.5"));
        assert!(with(&ok).is_ok());
        let mut big = base.to_vec();
        big.push(("SPE_NOISE__STRENGTH", "2.0"));
        assert!(msg(with(&big)).contains("delta^2"));
        let inviscid = [("SPE_NOISE__KIND", "vertical_transport"), ("SPE_NOISE__STRENGTH", "0.1")];
        assert!(msg(with(&inviscid)).contains("not admissible in inviscid"));
    }

    #[test]
    fn additive_radius_pairs() {
        assert!(with(&[("SPE_NOISE__KIND", "additive"), ("SPE_NOISE__STRENGTH", "0.1")]).is_ok());
        let r = with(&[("SPE_NOISE__KIND", "additive"), ("SPE_NOISE__STRENGTH", "0.1"), ("SPE_NOISE__ADDITIVE_MU", "0.3")]);
        assert!(msg(r).contains("additive noise shapes"));
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert!(msg(with(&[("SPE_BOGUS", "1")])).contains("bogus"));
        assert!(msg(parse("mode = \"inviscid\"")).contains("missing field"));
        assert!(msg(with(&[("SPE_PHYSICS__F0__X", "1")])).contains("not a table"));
    }

    #[test]
    fn numeric_and_string_overrides() {
        let c = with(&[("SPE_ORDER", "4"), ("SPE_DT", "1e-4"), ("SPE_OUTPUT_DIR", "/tmp/x y")]).unwrap();
        assert_eq!(c.order, 4);
        assert_eq!(c.dt, Some(1e-4));
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x y"));
    }

    #[test]
    fn default_dt_rule() {
        let c = with(&[("SPE_NOISE__KIND", "multiplicative"), ("SPE_NOISE__STRENGTH", "0.2")]).unwrap();
        let s = c.run_setup().unwrap();
        assert_eq!(s.n_steps(), 500);
        let c = with(&[("SPE_NOISE__KIND", "multiplicative"), ("SPE_NOISE__STRENGTH", "10.0")]).unwrap();
        assert_eq!(c.default_dt(), 1e-3 / 100.0);
    }

    #[test]
    fn single_mode_ic() {
        let text = MINIMAL.replace(
            "kind = \"random_analytic\"\nmu = 1.0\nq = 1.0\nnorm = 0.5",
            "kind = \"single_mode\"\nmode = [0, 0, 1]\namplitude = [1e-4, 0.0]",
        );
        let c = parse(&text).unwrap();
        let v = c.initial_state(3).unwrap();
        assert_eq!(v.get(ModeIndex::new(0, 0, 1)).unwrap()[0], C64::new(1e-4, 0.0));
    }

    #[test]
    fn default_constant_is_reproduced() {
        use crate::verify::lemmas::{calibrate_c, SweepParams};
        let sp = SweepParams { tau: 0.1, gamma: 0.05, r: 2.6, samples: 500, seed: 1 };
        assert_eq!(calibrate_c(&sp, 4).unwrap(), DEFAULT_C_CAL);
    }
}
