//! Sequence regression from actuator command windows to next-tick tension.
//!
//! Both predictors are written out by hand: forward passes keep the
//! activations they need, and the backward passes run full backpropagation
//! (through time for the LSTM) into a flat gradient buffer that mirrors the
//! flat parameter buffer. [`gradcheck`] gives an independent
//! central-difference oracle for those gradients.

pub mod checkpoint;
mod cnn;
pub mod gradcheck;
mod loss;
mod lstm;
mod math;
mod model;
mod norm;
mod optim;
mod params;
mod train;
mod window;

pub use cnn::{CnnCache, CnnParams};
pub use loss::{mse_grad, mse_loss};
pub use lstm::{lstm_cell, LstmCache, LstmCellOutput, LstmParams};
pub use model::{ForwardCache, Model, ModelKind, Network, TensionPredictor};
pub use norm::Normalizer;
pub use optim::{SgdMomentum, WeightAverage};
pub use params::{Gradients, ParamLayout, TensorSpec};
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_VERSION};
pub use train::{evaluate, evaluate_per_cable, train, EpochStats, EvalPlan, TrainConfig, TrainOutcome};
pub use window::SequenceWindow;
