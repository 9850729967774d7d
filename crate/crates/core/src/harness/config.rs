use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::CompareConfig;
use super::impulse::ImpulseConfig;
use super::insert::InsertConfig;
use super::rate_statics::RateStaticsConfig;
use crate::compliance::ControllerConfig;
use crate::error::{Error, Result};
use crate::explorer::CollectConfig;
use crate::robotsim::PlantConfig;
use crate::seqmodels::{EvalPlan, ModelKind, TrainConfig};
use crate::tipcal::CalibrationConfig;

/// Where scenarios read upstream artifacts. Relative paths resolve against
/// the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { dataset: PathBuf::from("dataset.csv"), checkpoint: PathBuf::from("model.json") }
    }
}

impl PathsConfig {
    pub fn dataset_in(&self, out: &Path) -> PathBuf {
        resolve(out, &self.dataset)
    }

    pub fn checkpoint_in(&self, out: &Path) -> PathBuf {
        resolve(out, &self.checkpoint)
    }
}

fn resolve(out: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; [`ExperimentConfig::with_seed`] spreads it to every component.
    pub seed: u64,
    /// Fraction of the dataset used for training (temporal split).
    pub split_fraction: f64,
    /// Derive the deadband from the checkpoint's validation error instead of
    /// `controller.lambda`.
    pub lambda_from_checkpoint: bool,
    pub paths: PathsConfig,
    pub plant: PlantConfig,
    pub collect: CollectConfig,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub eval: EvalPlan,
    pub controller: ControllerConfig,
    pub compare: CompareConfig,
    pub rate_statics: RateStaticsConfig,
    pub impulse: ImpulseConfig,
    pub insert: InsertConfig,
    pub calibrate: CalibrationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            split_fraction: 0.8,
            lambda_from_checkpoint: true,
            paths: PathsConfig::default(),
            plant: PlantConfig::default(),
            collect: CollectConfig::default(),
            model: ModelKind::Lstm { hidden: 32 },
            train: TrainConfig::default(),
            eval: EvalPlan::default(),
            controller: ControllerConfig::default(),
            compare: CompareConfig::default(),
            rate_statics: RateStaticsConfig::default(),
            impulse: ImpulseConfig::default(),
            insert: InsertConfig::default(),
            calibrate: CalibrationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Copy with `seed` applied to the plant noise, exploration and training.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.plant.rng_seed = seed;
        self.collect.seed = seed;
        self.train.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.collect.validate()?;
        self.train.validate()?;
        self.controller.validate()?;
        self.calibrate.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig("split_fraction must lie in (0, 1)".into()));
        }
        if (self.controller.rate - self.plant.control_rate).abs() > 1e-9 {
            return Err(Error::InvalidConfig("controller rate must equal the plant control rate".into()));
        }
        if self.controller.window_length != self.train.window_len {
            return Err(Error::InvalidConfig("controller window_length must equal train.window_len".into()));
        }
        if (self.controller.actuation_range - self.plant.actuation_range).abs() > 1e-9 {
            return Err(Error::InvalidConfig("controller and plant actuation ranges differ".into()));
        }
        Ok(())
    }
}
