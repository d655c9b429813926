//! Experiment configuration: a TOML document with one block per concern.
//! Missing keys take the defaults of the chosen scale; unknown keys are
//! rejected.

use beamfocus::comm::{db_to_linear, dbm_to_mw, PowerModel};
use beamfocus::geometry::{
    rayleigh_distance, ArrayGeometry, ChannelModel, ChannelSet, NlosPath, SteeringMode, TargetSpec, UserSpec,
};
use beamfocus::linalg::cr;
use beamfocus::scenario::Scenario;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 16/16 antennas, two users, run in CI.
    Desk,
    /// 64/64 antennas and four users as in the reference setup.
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Digital,
    Fully,
    Partially,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Digital, Arch::Fully, Arch::Partially];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Digital => "digital",
            Arch::Fully => "fully",
            Arch::Partially => "partially",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Point,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Radar SNR in dB.
    SnrDb,
    /// Energy-efficiency threshold in bits/s/Hz/J.
    EeThreshold,
    /// Transmit budget in dBm.
    PowerDbm,
    /// Target range in metres.
    TargetDistance,
    /// Target range in Rayleigh distances.
    TargetDistanceRd,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::EeThreshold => "ee_threshold",
            SweepVar::PowerDbm => "power_dbm",
            SweepVar::TargetDistance => "target_distance",
            SweepVar::TargetDistanceRd => "target_distance_rd",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub carrier_ghz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Aggregate antenna/processing gain on every path.
    pub link_gain_db: f64,
    /// Molecular absorption in 1/m.
    pub absorption: f64,
    pub nlos_scale: f64,
    /// Seed of the path phases, separate from the Monte Carlo seed.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlosConfig {
    pub distance: f64,
    pub angle_deg: f64,
    pub gain_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub distance: f64,
    pub angle_deg: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nlos: Vec<NlosConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    pub distance: f64,
    pub angle_deg: f64,
    /// Radar SNR `|μ|²LP/σ²` (point); for an extended target it sets the
    /// radar noise to `σ_β²LP/SNR`.
    pub snr_db: f64,
    /// Prior variance σ_β² of the extended response.
    pub prior_variance_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub power_dbm: f64,
    pub sinr_db: f64,
    pub ee_threshold: f64,
    pub amplifier_eff: f64,
    pub static_dbm: f64,
    pub noise_dbm: f64,
    pub frame_len: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<SweepVar>,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: None, format: Format::Csv }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte Carlo trials per sweep point and architecture; 0 skips them.
    pub trials: usize,
    pub architectures: Vec<Arch>,
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    pub target: TargetConfig,
    pub constraints: ConstraintConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub users: Vec<UserConfig>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, source: std::io::Error },
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "{path}: {source}"),
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<beamfocus::Error> for ConfigError {
    fn from(e: beamfocus::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn defaults(scale: Scale) -> Self {
        match scale {
            Scale::Paper => Self::paper(),
            Scale::Desk => Self::desk(),
        }
    }

    pub fn paper() -> Self {
        let users = [(15.0, -60.0), (10.0, -30.0), (15.0, 30.0), (10.0, 60.0)]
            .iter()
            .map(|&(distance, angle_deg)| UserConfig { distance, angle_deg, nlos: vec![] })
            .collect();
        Self {
            seed: 0,
            trials: 200,
            architectures: Arch::ALL.to_vec(),
            geometry: GeometryConfig { n_tx: 64, n_rx: 64, n_rf: 4, carrier_ghz: 28.0 },
            channel: ChannelConfig { link_gain_db: 60.0, absorption: 0.0, nlos_scale: 0.1, seed: 1 },
            target: TargetConfig {
                kind: TargetKind::Point,
                distance: 10.0,
                angle_deg: 15.0,
                snr_db: 10.0,
                prior_variance_dbm: 0.0,
            },
            constraints: ConstraintConfig {
                power_dbm: 34.0,
                sinr_db: 2.0,
                ee_threshold: 4.0,
                amplifier_eff: 0.5,
                static_dbm: 15.0,
                noise_dbm: 0.0,
                frame_len: 64,
            },
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
            users,
        }
    }

    /// The reference layout shrunk to 16 antennas. Distances scale with the
    /// Rayleigh distance, `(16/64)²` of the reference one.
    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.geometry = GeometryConfig { n_tx: 16, n_rx: 16, n_rf: 4, carrier_ghz: 28.0 };
        c.users = vec![
            UserConfig { distance: 0.9375, angle_deg: -60.0, nlos: vec![] },
            UserConfig { distance: 0.625, angle_deg: -30.0, nlos: vec![] },
        ];
        c.target.distance = 0.625;
        c.constraints.ee_threshold = 2.0;
        c.constraints.frame_len = 16;
        c
    }

    /// Parses `text` over the defaults of `scale`: keys present in the
    /// document replace the defaults, tables merge recursively.
    pub fn from_toml(text: &str, scale: Scale) -> Result<Self, ConfigError> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::defaults(scale)).map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut base, doc);
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization; `from_toml(to_toml(c)) == c`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.users.is_empty() {
            return Err(ConfigError::Invalid("at least one user is required".into()));
        }
        if self.architectures.is_empty() {
            return Err(ConfigError::Invalid("architecture list is empty".into()));
        }
        if self.sweep.variable.is_none() && !self.sweep.values.is_empty() {
            return Err(ConfigError::Invalid("sweep.values given without sweep.variable".into()));
        }
        if self.sweep.variable.is_some() && self.sweep.values.is_empty() {
            return Err(ConfigError::Invalid("sweep.variable given without values".into()));
        }
        self.scenario()?.validate()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, ConfigError> {
        let g = &self.geometry;
        Ok(ArrayGeometry::new(g.n_tx, g.n_rx, g.n_rf, g.carrier_ghz * 1e9)?)
    }

    pub fn rayleigh_distance(&self) -> Result<f64, ConfigError> {
        Ok(rayleigh_distance(&self.geometry()?))
    }

    pub fn budget_mw(&self) -> f64 {
        dbm_to_mw(self.constraints.power_dbm)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let geometry = self.geometry()?;
        let c = &self.constraints;
        let users = self
            .users
            .iter()
            .enumerate()
            .map(|(id, u)| UserSpec {
                id,
                distance: u.distance,
                angle: u.angle_deg.to_radians(),
                nlos_paths: u
                    .nlos
                    .iter()
                    .map(|p| NlosPath { distance: p.distance, angle: p.angle_deg.to_radians(), gain_scale: p.gain_scale })
                    .collect(),
            })
            .collect();
        let budget = self.budget_mw();
        let noise = dbm_to_mw(c.noise_dbm);
        let snr = db_to_linear(self.target.snr_db);
        let l = c.frame_len as f64;
        let (target, radar_noise) = match self.target.kind {
            TargetKind::Point => {
                let mu = (snr * noise / (l * budget)).sqrt();
                let t = TargetSpec::Point {
                    distance: self.target.distance,
                    angle: self.target.angle_deg.to_radians(),
                    mu: cr(mu),
                };
                (t, noise)
            }
            TargetKind::Extended => {
                let prior = dbm_to_mw(self.target.prior_variance_dbm);
                (TargetSpec::Extended { prior_variance: prior }, prior * l * budget / snr)
            }
        };
        Ok(Scenario {
            geometry,
            users,
            target,
            power: PowerModel { amplifier_eff: c.amplifier_eff, static_power: dbm_to_mw(c.static_dbm), budget },
            sinr_threshold: db_to_linear(c.sinr_db),
            ee_threshold: c.ee_threshold,
            user_noise: noise,
            radar_noise,
            frame_len: c.frame_len,
            steering: SteeringMode::Exact,
        })
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel {
            absorption: self.channel.absorption,
            nlos_scale: self.channel.nlos_scale,
            link_gain_db: self.channel.link_gain_db,
            ..ChannelModel::default()
        }
    }

    pub fn channels(&self, scen: &Scenario) -> Result<ChannelSet, ConfigError> {
        let mut rng = beamfocus::estimators::trial_rng(self.channel.seed, 0);
        Ok(ChannelSet::generate(&scen.geometry, &scen.users, &self.channel_model(), &mut rng)?)
    }

    /// The sweep points, or the single base point when no sweep is set.
    pub fn sweep_points(&self) -> Vec<(Option<SweepVar>, f64)> {
        match self.sweep.variable {
            Some(v) => self.sweep.values.iter().map(|&x| (Some(v), x)).collect(),
            None => vec![(None, 0.0)],
        }
    }

    /// Copy with the sweep variable set to `value`.
    pub fn at(&self, var: Option<SweepVar>, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        match var {
            None => {}
            Some(SweepVar::SnrDb) => c.target.snr_db = value,
            Some(SweepVar::EeThreshold) => c.constraints.ee_threshold = value,
            Some(SweepVar::PowerDbm) => c.constraints.power_dbm = value,
            Some(SweepVar::TargetDistance) => c.target.distance = value,
            Some(SweepVar::TargetDistanceRd) => c.target.distance = value * self.rayleigh_distance()?,
        }
        Ok(c)
    }

    /// One-line description for run headers.
    pub fn header(&self) -> Result<String, ConfigError> {
        let g = &self.geometry;
        Ok(format!(
            "n_tx={} n_rx={} n_rf={} f={} GHz users={} target={:?} rayleigh_distance={:.2} m seed={}",
            g.n_tx,
            g.n_rx,
            g.n_rf,
            g.carrier_ghz,
            self.users.len(),
            self.target.kind,
            self.rayleigh_distance()?,
            self.seed
        ))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn load_config(path: &Path, scale: Scale) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    ExperimentConfig::from_toml(&text, scale)
}
