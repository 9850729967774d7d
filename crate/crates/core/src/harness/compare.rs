//! Grid of architectures, sizes and window lengths trained on one dataset
//! over a fixed seed set.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{load_dataset, write_json};
use crate::error::{Error, Result};
use crate::explorer::Dataset;
use crate::seqmodels::{evaluate, train, EvalPlan, ModelKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    /// LSTM hidden sizes and CNN kernel sizes.
    pub sizes: Vec<usize>,
    pub windows: Vec<usize>,
    pub seeds: Vec<u64>,
    pub cnn_layers: usize,
    pub cnn_filters: usize,
    /// Labels such as `LSTM-64/n200` to run; empty runs the whole grid.
    pub only: Vec<String>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            sizes: vec![32, 64],
            windows: vec![100, 200],
            seeds: vec![0, 1, 2],
            cnn_layers: 3,
            cnn_filters: 16,
            only: Vec::new(),
        }
    }
}

impl CompareConfig {
    /// Every cell in fixed order: LSTM before CNN, then size, then window.
    pub fn grid(&self) -> Vec<(ModelKind, usize)> {
        let mut out = Vec::new();
        for family in 0..2 {
            for &size in &self.sizes {
                let kind = if family == 0 {
                    ModelKind::Lstm { hidden: size }
                } else {
                    ModelKind::Cnn { layers: self.cnn_layers, kernel: size, filters: self.cnn_filters }
                };
                for &n in &self.windows {
                    out.push((kind, n));
                }
            }
        }
        out
    }
}

pub fn cell_label(kind: &ModelKind, window: usize) -> String {
    format!("{}/n{window}", kind.label())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// At least one seed diverged; the mean covers the others.
    Diverged,
    /// The window is shorter than the architecture's receptive field.
    Infeasible,
    /// Excluded by `only`.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub label: String,
    pub model: ModelKind,
    pub window: usize,
    pub status: CellStatus,
    /// Validation mean error per seed, N; `None` where training diverged.
    pub seed_errors: Vec<Option<f64>>,
    pub mean_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    /// Every cell is scored on targets with at least this much history.
    pub eval: EvalPlan,
    pub cells: Vec<CompareCell>,
}

impl CompareReport {
    pub fn cell(&self, label: &str) -> Option<&CompareCell> {
        self.cells.iter().find(|c| c.label == label)
    }
}

/// Trains and scores every selected cell on the same split and seeds.
pub fn compare_grid(
    train_split: &Dataset,
    val_split: &Dataset,
    train_cfg: &TrainConfig,
    eval: &EvalPlan,
    cfg: &CompareConfig,
) -> Result<CompareReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one seed".into()));
    }
    let longest = cfg.windows.iter().copied().max().unwrap_or(0);
    let eval = EvalPlan { min_history: eval.min_history.max(longest), ..*eval };
    let mut cells = Vec::new();
    for (kind, window) in cfg.grid() {
        let label = cell_label(&kind, window);
        let mut cell =
            CompareCell { label, model: kind, window, status: CellStatus::Ok, seed_errors: Vec::new(), mean_error: None };
        if !cfg.only.is_empty() && !cfg.only.contains(&cell.label) {
            cell.status = CellStatus::Skipped;
        } else if window < kind.min_window() {
            cell.status = CellStatus::Infeasible;
        } else {
            for &seed in &cfg.seeds {
                let tc = TrainConfig { window_len: window, rng_seed: seed, ..train_cfg.clone() };
                let err = match train(kind, train_split, val_split, &tc) {
                    Ok(outcome) => Some(evaluate(&outcome.model, val_split, &eval)?),
                    Err(Error::Diverged { .. }) => None,
                    Err(e) => return Err(e),
                };
                cell.seed_errors.push(err);
            }
            let ok: Vec<f64> = cell.seed_errors.iter().flatten().copied().collect();
            if ok.len() < cell.seed_errors.len() {
                cell.status = CellStatus::Diverged;
            }
            if !ok.is_empty() {
                cell.mean_error = Some(ok.iter().sum::<f64>() / ok.len() as f64);
            }
        }
        cells.push(cell);
    }
    Ok(CompareReport { seeds: cfg.seeds.clone(), eval, cells })
}

/// Writes `compare_cells.csv` (one row per cell and seed), `compare_table.csv`
/// (mean error grid, sizes by window) and `compare.json`.
pub fn run_compare(cfg: &ExperimentConfig, out: &Path) -> Result<CompareReport> {
    fs::create_dir_all(out)?;
    let data = load_dataset(cfg, out)?;
    let (tr, va) = data.split(cfg.split_fraction)?;
    let report = compare_grid(&tr, &va, &cfg.train, &cfg.eval, &cfg.compare)?;

    let fmt = |v: Option<f64>| v.map(|e| e.to_string()).unwrap_or_default();
    let mut wr = csv::Writer::from_path(out.join("compare_cells.csv"))?;
    wr.write_record(["label", "model", "window", "seed", "val_mean_error_N", "status"])?;
    for c in &report.cells {
        let status = serde_json::to_value(c.status)?.as_str().unwrap_or_default().to_string();
        if c.seed_errors.is_empty() {
            wr.write_record([c.label.clone(), c.model.label(), c.window.to_string(), String::new(), String::new(), status])?;
            continue;
        }
        for (seed, e) in report.seeds.iter().zip(&c.seed_errors) {
            let s = if e.is_some() { "ok".to_string() } else { "diverged".to_string() };
            wr.write_record([c.label.clone(), c.model.label(), c.window.to_string(), seed.to_string(), fmt(*e), s])?;
        }
    }
    wr.flush()?;

    let mut wr = csv::Writer::from_path(out.join("compare_table.csv"))?;
    let mut header = vec!["model".to_string()];
    header.extend(cfg.compare.windows.iter().map(|n| format!("n{n}_mean_error_N")));
    wr.write_record(&header)?;
    for chunk in report.cells.chunks(cfg.compare.windows.len().max(1)) {
        let mut row = vec![chunk[0].model.label()];
        row.extend(chunk.iter().map(|c| fmt(c.mean_error)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    write_json(&out.join("compare.json"), &report)?;
    Ok(report)
}
