//! TOML run configuration. Angles are given in degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ucal_core::{BcdConfig, OffsetAggregation, OmpConfig, PhaseSource};

use crate::benchmark::SimConfig;
use crate::error::{Error, Result};
use crate::scene::UraConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub deterministic: bool,
    pub simulate: SimulateConfig,
    pub calibrate: CalibrateConfig,
    pub dictionary: DictionaryRunConfig,
    pub image: ImageConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimSource {
    /// Random unit-modulus factors as in the Monte Carlo benchmark.
    #[default]
    Random,
    /// Point targets seen by a simulated rectangular array.
    Ura,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub range: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub output: PathBuf,
    /// Omitted means noise-free.
    pub snr_db: Option<f64>,
    pub targets: Vec<TargetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub source: SimSource,
    /// Position count for the random source.
    pub positions: usize,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub t: usize,
    pub delta: f64,
    /// Omitted means noise-free.
    pub snr_db: Option<f64>,
    /// Optional path for the true parameters.
    pub truth: Option<PathBuf>,
    pub ura: UraConfig,
    /// Calibration grid of the rectangular array source.
    pub range: f64,
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    pub scene: Option<SceneConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            source: SimSource::Random,
            positions: 10,
            n: 2,
            m: 8,
            l: 12,
            t: 4,
            delta: 0.5,
            snr_db: None,
            truth: None,
            ura: UraConfig::default(),
            range: 1.0,
            azimuth_deg: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            elevation_deg: vec![-10.0, 0.0, 10.0],
            scene: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        let d = BcdConfig::default();
        Self {
            epsilon: d.epsilon,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

impl CalibrateConfig {
    pub fn bcd(&self, deterministic: bool) -> BcdConfig {
        BcdConfig {
            epsilon: self.epsilon,
            tol: self.tol,
            max_iter: self.max_iter,
            deterministic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionaryRunConfig {
    pub c_sound: f64,
    pub fs: f64,
    pub l_dft: usize,
    /// Fixed range offset in metres. Omitted means estimate it from the
    /// learned phase responses.
    pub r0: Option<f64>,
    /// Scan range offsets in metres relative to each calibration range.
    pub offsets: Vec<f64>,
    pub source: PhaseSourceConfig,
    pub aggregation: AggregationConfig,
}

impl Default for DictionaryRunConfig {
    fn default() -> Self {
        Self {
            c_sound: 343.0,
            fs: 195_000.0,
            l_dft: 4096,
            r0: None,
            offsets: vec![0.0],
            source: PhaseSourceConfig::Model,
            aggregation: AggregationConfig::Mean,
        }
    }
}

impl DictionaryRunConfig {
    pub fn delta_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.fs / self.l_dft as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSourceConfig {
    Model,
    Learned,
}

impl From<PhaseSourceConfig> for PhaseSource {
    fn from(v: PhaseSourceConfig) -> Self {
        match v {
            PhaseSourceConfig::Model => PhaseSource::Model,
            PhaseSourceConfig::Learned => PhaseSource::Learned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationConfig {
    Mean,
    Sum,
}

impl From<AggregationConfig> for OffsetAggregation {
    fn from(v: AggregationConfig) -> Self {
        match v {
            AggregationConfig::Mean => OffsetAggregation::Mean,
            AggregationConfig::Sum => OffsetAggregation::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageConfig {
    /// Absolute stop threshold on the squared residual norm.
    pub eta: f64,
    /// Stop threshold as a fraction of the scene energy `‖Y‖²`. Replaces
    /// `eta` when set.
    pub eta_relative: Option<f64>,
    pub max_iter: usize,
    pub power_floor_db: f64,
    pub condition_limit: f64,
    /// Index of the tensor to image within the input file.
    pub scene: usize,
}

impl Default for ImageConfig {
    fn default() -> Self {
        let d = OmpConfig::default();
        Self {
            eta: d.eta,
            eta_relative: None,
            max_iter: d.max_iter,
            power_floor_db: d.power_floor_db,
            condition_limit: d.condition_limit,
            scene: 0,
        }
    }
}

impl ImageConfig {
    /// Solver settings for a scene of energy `scene_energy`.
    pub fn omp(&self, scene_energy: f64) -> OmpConfig {
        OmpConfig {
            eta: self
                .eta_relative
                .map_or(self.eta, |fraction| fraction * scene_energy),
            max_iter: self.max_iter,
            power_floor_db: self.power_floor_db,
            condition_limit: self.condition_limit,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Use the full-size sweep instead of the desk-scale one.
    pub full: bool,
    /// Explicit sweep; overrides `full`. Its seed is replaced by the run seed.
    pub sweep: Option<SimConfig>,
}

impl EvalConfig {
    pub fn sweep(&self, seed: u64) -> SimConfig {
        let base = match (&self.sweep, self.full) {
            (Some(s), _) => s.clone(),
            (None, true) => SimConfig::full(),
            (None, false) => SimConfig::desk(),
        };
        SimConfig { seed, ..base }
    }
}
