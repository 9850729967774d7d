//! JSON checkpoint container.
//!
//! Layout (version 1):
//!
//! ```text
//! {
//!   "version": 1,
//!   "model": {"kind": "lstm", "hidden": 32} | {"kind": "cnn", "layers": 3, "kernel": 32, "filters": 16},
//!   "window_len": 100,
//!   "dt": 0.01,
//!   "normalizer": {"input_mean": [..3], "input_std": [..3], "target_mean": [..3], "target_std": [..3]},
//!   "train_config": {...},
//!   "tensors": [{"name": "W_qi", "shape": [32, 3], "values": [...]}, ...],
//!   "momentum": [...flat, same order as the concatenated tensors...],
//!   "history": [{"epoch": 0, "train_loss": .., "train_mean_error": .., "val_mean_error": ..}, ...],
//!   "val_mean_error": 0.12
//! }
//! ```
//!
//! Tensor values are row-major in the order of their shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelKind};
use super::norm::Normalizer;
use super::train::{EpochStats, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelKind,
    pub window_len: usize,
    pub dt: f64,
    pub normalizer: Normalizer,
    pub train_config: TrainConfig,
    pub tensors: Vec<NamedTensor>,
    pub momentum: Vec<f64>,
    pub history: Vec<EpochStats>,
    pub val_mean_error: Option<f64>,
}

impl Checkpoint {
    pub fn from_outcome(outcome: &TrainOutcome, train_config: &TrainConfig, dt: f64) -> Self {
        let model = &outcome.model;
        let values = model.net.values();
        let tensors = model
            .net
            .layout()
            .tensors
            .iter()
            .map(|t| NamedTensor { name: t.name.clone(), shape: t.shape.clone(), values: values[t.range()].to_vec() })
            .collect();
        Self {
            version: CHECKPOINT_VERSION,
            model: model.kind(),
            window_len: model.window_len,
            dt,
            normalizer: model.norm.clone(),
            train_config: train_config.clone(),
            tensors,
            momentum: outcome.velocity.clone(),
            history: outcome.history.clone(),
            val_mean_error: outcome.history.last().map(|h| h.val_mean_error),
        }
    }

    /// Rebuilds the model, checking every tensor against the architecture's layout.
    pub fn to_model(&self) -> Result<Model> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported checkpoint version {}", self.version)));
        }
        let mut net = self.model.zeros()?;
        let layout = net.layout();
        if layout.tensors.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} tensors, {} expects {}",
                self.tensors.len(),
                self.model.label(),
                layout.tensors.len()
            )));
        }
        let values = net.values_mut();
        for (spec, t) in layout.tensors.iter().zip(&self.tensors) {
            if spec.name != t.name || spec.shape != t.shape || t.values.len() != spec.len() {
                return Err(Error::Shape(format!("tensor {} does not match layout entry {}", t.name, spec.name)));
            }
            values[spec.range()].copy_from_slice(&t.values);
        }
        if self.momentum.len() != layout.total() && !self.momentum.is_empty() {
            return Err(Error::Shape("momentum length does not match parameter count".into()));
        }
        let net = self.model.from_values(net.values().to_vec())?;
        Model::new(net, self.window_len, self.normalizer.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn outcome(kind: ModelKind, window_len: usize) -> TrainOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = kind.init(&mut rng).unwrap();
        let n = net.values().len();
        let norm = Normalizer { input_mean: [1.0, 2.0, 3.0], input_std: [0.5; 3], target_mean: [4.0; 3], target_std: [2.0; 3] };
        TrainOutcome {
            model: Model::new(net, window_len, norm).unwrap(),
            history: vec![EpochStats { epoch: 0, train_loss: 0.5, train_mean_error: 0.4, val_mean_error: 0.3 }],
            velocity: vec![0.25; n],
        }
    }

    #[test]
    fn round_trip_preserves_model() {
        for (kind, n) in [(ModelKind::Lstm { hidden: 6 }, 12), (ModelKind::Cnn { layers: 2, kernel: 3, filters: 4 }, 9)] {
            let out = outcome(kind, n);
            let ck = Checkpoint::from_outcome(&out, &TrainConfig::default(), 0.01);
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_model().unwrap(), out.model);
            assert_eq!(back.val_mean_error, Some(0.3));
        }
    }

    #[test]
    fn tensors_are_named_with_shapes() {
        let ck = Checkpoint::from_outcome(&outcome(ModelKind::Lstm { hidden: 4 }, 5), &TrainConfig::default(), 0.01);
        let wqi = ck.tensors.iter().find(|t| t.name == "W_qi").unwrap();
        assert_eq!(wqi.shape, vec![4, 3]);
        assert_eq!(wqi.values.len(), 12);
        assert!(ck.to_json().unwrap().contains("\"version\": 1"));
    }

    #[test]
    fn mismatches_rejected() {
        let out = outcome(ModelKind::Lstm { hidden: 4 }, 5);
        let mut ck = Checkpoint::from_outcome(&out, &TrainConfig::default(), 0.01);
        ck.version = 2;
        assert!(ck.to_model().is_err());
        ck.version = 1;
        ck.tensors[0].shape = vec![3, 4];
        assert!(ck.to_model().is_err());
        let mut ck = Checkpoint::from_outcome(&out, &TrainConfig::default(), 0.01);
        ck.model = ModelKind::Lstm { hidden: 5 };
        assert!(ck.to_model().is_err());
    }
}
