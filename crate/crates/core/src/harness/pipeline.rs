//! Collect, train, evaluate and calibrate, each reading the previous stage's
//! artifact from the output directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::compliance::{select_lambda, Controller, ControllerConfig};
use crate::error::{Error, Result};
use crate::explorer::{collect, CollectOutcome, Dataset};
use crate::geometry::Vec3;
use crate::robotsim::Plant;
use crate::seqmodels::{evaluate, train, Checkpoint, Model, TrainOutcome};
use crate::tipcal::{run_calibration, write_report_csv, CalibrationReport};

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs the explorer on a fresh plant and writes `dataset.csv` plus a summary.
pub fn run_collect(cfg: &ExperimentConfig, out: &Path) -> Result<CollectOutcome> {
    fs::create_dir_all(out)?;
    let start = crate::explorer::xyc_to_q(&crate::explorer::XycPoint {
        x: cfg.collect.workspace.center[0],
        y: cfg.collect.workspace.center[1],
        c: cfg.collect.initial_c,
    });
    let mut plant = Plant::at_rest(cfg.plant.clone(), start)?;
    let outcome = collect(&mut plant, &cfg.collect)?;
    outcome.dataset.save(&cfg.paths.dataset_in(out))?;
    write_json(
        &out.join("collect_summary.json"),
        &serde_json::json!({
            "records": outcome.dataset.len(),
            "rate_hz": outcome.dataset.rate,
            "faults": outcome.faults,
            "out_of_range_fraction": outcome.out_of_range_fraction,
            "surface_samples": outcome.surface.len(),
            "tension_std_N": outcome.dataset.tension_std(),
        }),
    )?;
    Ok(outcome)
}

pub fn load_dataset(cfg: &ExperimentConfig, out: &Path) -> Result<Dataset> {
    let path = cfg.paths.dataset_in(out);
    if !path.exists() {
        return Err(Error::Dataset(format!("dataset {} not found; run collect first", path.display())));
    }
    Dataset::load(&path, cfg.plant.control_rate)
}

/// Trains `cfg.model` on the training split and writes the checkpoint and
/// per-epoch history.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<(TrainOutcome, Checkpoint)> {
    fs::create_dir_all(out)?;
    let data = load_dataset(cfg, out)?;
    let (tr, va) = data.split(cfg.split_fraction)?;
    let outcome = train(cfg.model, &tr, &va, &cfg.train)?;
    let ck = Checkpoint::from_outcome(&outcome, &cfg.train, cfg.plant.control_dt());
    ck.save(&cfg.paths.checkpoint_in(out))?;
    let mut wr = csv::Writer::from_path(out.join("train_history.csv"))?;
    wr.write_record(["epoch", "train_loss", "train_mean_error_N", "val_mean_error_N"])?;
    for h in &outcome.history {
        wr.write_record([
            h.epoch.to_string(),
            h.train_loss.to_string(),
            h.train_mean_error.to_string(),
            h.val_mean_error.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok((outcome, ck))
}

pub fn load_checkpoint(cfg: &ExperimentConfig, out: &Path) -> Result<Checkpoint> {
    let path = cfg.paths.checkpoint_in(out);
    if !path.exists() {
        return Err(Error::InvalidConfig(format!("checkpoint {} not found; run train first", path.display())));
    }
    Checkpoint::load(&path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub window_len: usize,
    pub val_mean_error: f64,
    pub val_tension_std: Vec3,
    /// Mean error over the mean per-cable standard deviation.
    pub relative_error: f64,
    pub lambda: f64,
}

/// Scores the checkpoint on the validation split and writes `eval.json`.
pub fn run_eval(cfg: &ExperimentConfig, out: &Path) -> Result<EvalReport> {
    let data = load_dataset(cfg, out)?;
    let (_, va) = data.split(cfg.split_fraction)?;
    let ck = load_checkpoint(cfg, out)?;
    let model = ck.to_model()?;
    let err = evaluate(&model, &va, &cfg.eval)?;
    let std = va.tension_std();
    let report = EvalReport {
        model: model.kind().label(),
        window_len: model.window_len,
        val_mean_error: err,
        val_tension_std: std,
        relative_error: err / (std.iter().sum::<f64>() / 3.0),
        lambda: select_lambda(err)?,
    };
    write_json(&out.join("eval.json"), &report)?;
    Ok(report)
}

/// Controller around the trained model, with the deadband taken from the
/// checkpoint when configured so.
pub fn controller_for(cfg: &ExperimentConfig, ck: &Checkpoint, q0: Vec3) -> Result<Controller<Model>> {
    let model = ck.to_model()?;
    let mut ccfg: ControllerConfig = cfg.controller.clone();
    ccfg.window_length = model.window_len;
    if cfg.lambda_from_checkpoint {
        let err = ck
            .val_mean_error
            .ok_or_else(|| Error::InvalidConfig("checkpoint carries no validation error".into()))?;
        ccfg.lambda = select_lambda(err)?;
    }
    Controller::new(ccfg, model, q0)
}

/// Coin-weight calibration with the trained predictor; writes the trial CSV
/// and the fit.
pub fn run_calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<CalibrationReport> {
    fs::create_dir_all(out)?;
    let model = load_checkpoint(cfg, out)?.to_model()?;
    let report = run_calibration(&cfg.plant, &model, &cfg.calibrate)?;
    write_report_csv(fs::File::create(out.join("calibration_trials.csv"))?, &report)?;
    write_json(
        &out.join("calibration_fit.json"),
        &serde_json::json!({
            "alpha": report.fit.alpha,
            "inverse_alpha": 1.0 / report.fit.alpha,
            "rms_residual_N": report.fit.rms_residual,
            "trials": report.fit.trials,
            "discarded": report.discarded,
            "ground_truth_alpha": report.ground_truth_alpha,
            "relative_error": report.relative_error,
        }),
    )?;
    Ok(report)
}
