//! Mini-batch training on random contiguous windows.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{mse_grad, mse_loss};
use super::model::{Model, ModelKind};
use super::norm::Normalizer;
use super::optim::{SgdMomentum, WeightAverage};
use super::params::Gradients;
use crate::error::{Error, Result};
use crate::explorer::Dataset;
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Windows per parameter update.
    pub batch_size: usize,
    pub epochs: usize,
    /// Windows drawn from the training split per epoch.
    pub windows_per_epoch: usize,
    /// Validation windows scored after every epoch.
    pub val_windows: usize,
    /// Commands per input window.
    pub window_len: usize,
    pub rng_seed: u64,
    /// Global gradient norm limit per update, in normalized units; `inf`
    /// disables clipping.
    pub max_grad_norm: f64,
    /// Decay of an exponential moving average of the weights, which is what
    /// gets scored each epoch and returned; 0 keeps the last iterate.
    pub weight_average: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            momentum: 0.9,
            batch_size: 1,
            epochs: 40,
            windows_per_epoch: 1024,
            val_windows: 256,
            window_len: 100,
            rng_seed: 0,
            max_grad_norm: 1.0,
            weight_average: 0.998,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.windows_per_epoch == 0 || self.window_len == 0 {
            return Err(Error::InvalidConfig("batch, epoch and window sizes must be positive".into()));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::InvalidConfig("max_grad_norm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.weight_average) {
            return Err(Error::InvalidConfig("weight_average must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean normalized MSE over the epoch's training windows.
    pub train_loss: f64,
    /// Mean absolute error on the training windows, N (before each update).
    pub train_mean_error: f64,
    /// Mean absolute error on the validation windows, N.
    pub val_mean_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochStats>,
    /// Momentum buffer at the end of training.
    pub velocity: Vec<f64>,
}

/// Which validation windows to score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalPlan {
    /// Upper bound on scored windows; targets are strided evenly.
    pub max_windows: usize,
    /// Only score targets with at least this many commands of history, so
    /// models with different window lengths see the same targets.
    pub min_history: usize,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self { max_windows: 5000, min_history: 200 }
    }
}

impl EvalPlan {
    pub fn targets(&self, data: &Dataset, window_len: usize) -> Vec<usize> {
        let all = data.window_targets(window_len.max(self.min_history));
        strided(&all, self.max_windows)
    }
}

fn strided(all: &[usize], max: usize) -> Vec<usize> {
    if max == 0 || all.len() <= max {
        return all.to_vec();
    }
    (0..max).map(|k| all[k * all.len() / max]).collect()
}

/// Mean absolute per-cable error in newtons, averaged over cables and targets.
pub fn mean_abs_error(pred: &Vec3, target: &Vec3) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / 3.0
}

/// Mean absolute error (N) of `model` over the windows selected by `plan`.
pub fn evaluate(model: &Model, data: &Dataset, plan: &EvalPlan) -> Result<f64> {
    let targets = plan.targets(data, model.window_len);
    if targets.is_empty() {
        return Err(Error::Dataset(format!("no windows of length {} to evaluate", model.window_len)));
    }
    let mut total = 0.0;
    for &i in &targets {
        let pred = model.predict_history(&data.history(i, model.window_len)?)?;
        total += mean_abs_error(&pred, &data.records()[i].tension);
    }
    Ok(total / targets.len() as f64)
}

/// Mean absolute error (N) of each cable over the windows selected by `plan`.
pub fn evaluate_per_cable(model: &Model, data: &Dataset, plan: &EvalPlan) -> Result<Vec3> {
    let targets = plan.targets(data, model.window_len);
    if targets.is_empty() {
        return Err(Error::Dataset(format!("no windows of length {} to evaluate", model.window_len)));
    }
    let mut total = [0.0; 3];
    for &i in &targets {
        let pred = model.predict_history(&data.history(i, model.window_len)?)?;
        let target = data.records()[i].tension;
        for c in 0..3 {
            total[c] += (pred[c] - target[c]).abs();
        }
    }
    Ok(total.map(|t| t / targets.len() as f64))
}

/// Trains a fresh network of `kind` on `train`, scoring `val` every epoch.
///
/// Input and target statistics come from the training split only.
pub fn train(kind: ModelKind, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = cfg.window_len;
    let targets = train.window_targets(n);
    if targets.is_empty() {
        return Err(Error::Dataset(format!("training split has no windows of length {n}")));
    }
    let val_plan = EvalPlan { max_windows: cfg.val_windows, min_history: n };
    if val_plan.targets(val, n).is_empty() {
        return Err(Error::Dataset(format!("validation split has no windows of length {n}")));
    }

    let norm = Normalizer::fit(train.records().iter().map(|r| &r.q), train.records().iter().map(|r| &r.tension));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let net = kind.init(&mut rng)?;
    let mut model = Model::new(net, n, norm)?;
    let mut opt = SgdMomentum::new(cfg.learning_rate, cfg.momentum, model.net.values().len())?;
    let mut average = WeightAverage::new(cfg.weight_average, model.net.values())?;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut picks: Vec<usize> = (0..cfg.windows_per_epoch).map(|_| targets[rng.gen_range(0..targets.len())]).collect();
        picks.shuffle(&mut rng);
        let (mut loss_sum, mut err_sum) = (0.0, 0.0);
        for batch in picks.chunks(cfg.batch_size) {
            let mut grad = Gradients::zeros(model.net.values().len());
            for &i in batch {
                let inputs = model.encode(&train.history(i, n)?);
                let target = model.norm.normalize_target(&train.records()[i].tension);
                let (out, cache) = model.net.forward(&inputs).map_err(|_| Error::Diverged { epoch })?;
                let loss = mse_loss(&out, &target);
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                loss_sum += loss;
                err_sum += mean_abs_error(&model.norm.denormalize_target(&out), &train.records()[i].tension);
                grad.add_assign(&model.net.backward(&cache, &mse_grad(&out, &target))?);
            }
            grad.scale(1.0 / batch.len() as f64);
            grad.clip_norm(cfg.max_grad_norm);
            opt.step(model.net.values_mut(), &grad).map_err(|_| Error::Diverged { epoch })?;
            average.update(model.net.values());
        }
        let val_mean_error = evaluate(&averaged(&model, &average), val, &val_plan)?;
        if !val_mean_error.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / picks.len() as f64,
            train_mean_error: err_sum / picks.len() as f64,
            val_mean_error,
        });
    }
    let model = averaged(&model, &average);
    Ok(TrainOutcome { model, history, velocity: opt.velocity().to_vec() })
}

fn averaged(model: &Model, average: &WeightAverage) -> Model {
    let mut m = model.clone();
    m.net.values_mut().copy_from_slice(average.values());
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::Record;

    fn linear_map(q: &Vec3) -> Vec3 {
        [0.1 * q[0] - 0.02 * q[1] + 1.0, 0.08 * q[1] - 0.01 * q[2] + 2.0, 0.06 * q[2] + 0.03 * q[0] - 1.0]
    }

    /// Independent uniform commands with tension a fixed linear map of the
    /// newest command.
    fn linear_dataset(len: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Dataset::new(100.0);
        for i in 0..len {
            let q: Vec3 = std::array::from_fn(|_| rng.gen_range(10.0..30.0));
            d.push(Record { t: i as f64 / 100.0, q, tension: linear_map(&q), session: 0 }).unwrap();
        }
        d
    }

    #[test]
    fn learns_identifiable_linear_map() {
        let data = linear_dataset(6000, 1);
        let (tr, va) = data.split(0.8).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            windows_per_epoch: 4096,
            val_windows: 400,
            window_len: 3,
            batch_size: 4,
            ..Default::default()
        };
        let out = train(ModelKind::Lstm { hidden: 8 }, &tr, &va, &cfg).unwrap();
        let last = out.history.last().unwrap().val_mean_error;
        assert!(last < 1e-2, "val error {last}");
        assert!(out.history.iter().all(|h| h.val_mean_error.is_finite()));
    }

    #[test]
    fn constant_target_converges_to_constant() {
        let mut data = Dataset::new(100.0);
        for i in 0..2000 {
            let q = [10.0 + (i as f64 * 0.01).sin(), 12.0, 9.0 + (i as f64 * 0.013).cos()];
            data.push(Record { t: i as f64 / 100.0, q, tension: [4.0, 5.0, 6.0], session: 0 }).unwrap();
        }
        let (tr, va) = data.split(0.8).unwrap();
        let cfg = TrainConfig { epochs: 30, windows_per_epoch: 512, window_len: 4, batch_size: 8, ..Default::default() };
        let out = train(ModelKind::Lstm { hidden: 4 }, &tr, &va, &cfg).unwrap();
        // Constant targets normalize to zero; the head learns to output ~0.
        assert!(out.history.last().unwrap().val_mean_error < 1e-2);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = linear_dataset(1500, 2);
        let (tr, va) = data.split(0.8).unwrap();
        let cfg = TrainConfig { epochs: 3, windows_per_epoch: 64, window_len: 12, ..Default::default() };
        let kind = ModelKind::Cnn { layers: 2, kernel: 4, filters: 3 };
        let a = train(kind, &tr, &va, &cfg).unwrap();
        let b = train(kind, &tr, &va, &cfg).unwrap();
        assert_eq!(a.model.net.values(), b.model.net.values());
        assert_eq!(a.history, b.history);

        let plan = EvalPlan { max_windows: 100, min_history: 12 };
        let per = evaluate_per_cable(&a.model, &va, &plan).unwrap();
        let mean = evaluate(&a.model, &va, &plan).unwrap();
        assert!((per.iter().sum::<f64>() / 3.0 - mean).abs() < 1e-12);
    }

    #[test]
    fn averaging_changes_the_returned_weights() {
        let data = linear_dataset(1500, 6);
        let (tr, va) = data.split(0.8).unwrap();
        let base = TrainConfig { epochs: 2, windows_per_epoch: 64, window_len: 6, ..Default::default() };
        let kind = ModelKind::Lstm { hidden: 4 };
        let raw = train(kind, &tr, &va, &TrainConfig { weight_average: 0.0, ..base.clone() }).unwrap();
        let smooth = train(kind, &tr, &va, &base).unwrap();
        assert_ne!(raw.model.net.values(), smooth.model.net.values());
    }

    #[test]
    fn perfect_and_offset_predictors() {
        let data = linear_dataset(300, 3);
        let exact = |hist: &[Vec3]| linear_map(hist.last().unwrap());
        let mut err0 = 0.0;
        let mut err1 = 0.0;
        let targets = data.window_targets(3);
        for &i in &targets {
            let p = exact(&data.history(i, 3).unwrap());
            err0 += mean_abs_error(&p, &data.records()[i].tension);
            err1 += mean_abs_error(&p.map(|v| v + 0.25), &data.records()[i].tension);
        }
        assert!(err0 / (targets.len() as f64) < 1e-12);
        assert!((err1 / targets.len() as f64 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_unwindowable_data() {
        let data = linear_dataset(50, 4);
        let (tr, va) = data.split(0.8).unwrap();
        let cfg = TrainConfig { window_len: 100, ..Default::default() };
        assert!(train(ModelKind::Lstm { hidden: 4 }, &tr, &va, &cfg).is_err());
    }

    #[test]
    fn divergence_reported_with_epoch() {
        let data = linear_dataset(1000, 5);
        let (tr, va) = data.split(0.8).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e6,
            momentum: 0.9,
            epochs: 20,
            windows_per_epoch: 64,
            window_len: 4,
            max_grad_norm: f64::INFINITY,
            ..Default::default()
        };
        match train(ModelKind::Cnn { layers: 1, kernel: 2, filters: 4 }, &tr, &va, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|o| o.history)),
        }
    }
}
