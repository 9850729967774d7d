//! One cable driven in triangle waves at several speeds, showing how the
//! tension departs from the static curve as speed grows.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::write_json;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::robotsim::{Plant, PlantConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateStaticsConfig {
    /// mm/s
    pub speeds: Vec<f64>,
    /// Driven cable, 0-based.
    pub cable: usize,
    /// Rest position of all cables, mm.
    pub base: Vec3,
    /// Peak-to-peak travel of the driven cable is twice this, mm.
    pub amplitude: f64,
    pub cycles: usize,
}

impl Default for RateStaticsConfig {
    fn default() -> Self {
        Self { speeds: vec![1.0, 2.5, 10.0], cable: 0, base: [20.0; 3], amplitude: 10.0, cycles: 2 }
    }
}

impl RateStaticsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cable > 2 || self.cycles == 0 || !(self.amplitude > 0.0) {
            return Err(Error::InvalidConfig("rate-statics needs a cable in 0..3, cycles and amplitude".into()));
        }
        if self.speeds.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("rate-statics speeds must be positive".into()));
        }
        Ok(())
    }

    /// Simulated time per speed, s.
    pub fn duration(&self, speed: f64) -> f64 {
        self.cycles as f64 * 4.0 * self.amplitude / speed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    /// mm/s
    pub speed: f64,
    pub t: Vec<f64>,
    /// Driven cable position, mm.
    pub q: Vec<f64>,
    pub tension: Vec<Vec3>,
    /// Static tension of the driven cable at `q`, N.
    pub static_tension: Vec<f64>,
}

impl RateTrace {
    /// Largest distance of the driven cable's tension from its static value, N.
    pub fn max_deviation(&self, cable: usize) -> f64 {
        self.tension.iter().zip(&self.static_tension).map(|(t, s)| (t[cable] - s).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStaticsReport {
    pub cable: usize,
    pub traces: Vec<RateTrace>,
}

/// Triangle wave around `base[cable]` starting upward; each speed starts from
/// a fresh plant at rest.
pub fn rate_statics_traces(plant_cfg: &PlantConfig, cfg: &RateStaticsConfig) -> Result<RateStaticsReport> {
    cfg.validate()?;
    let dt = plant_cfg.control_dt();
    let mut traces = Vec::with_capacity(cfg.speeds.len());
    for &speed in &cfg.speeds {
        let mut plant = Plant::at_rest(plant_cfg.clone(), cfg.base)?;
        let rows = (cfg.duration(speed) / dt).round() as usize;
        let quarter = cfg.amplitude / speed;
        let mut trace =
            RateTrace { speed, t: Vec::with_capacity(rows), q: vec![], tension: vec![], static_tension: vec![] };
        for k in 1..=rows {
            let t = k as f64 * dt;
            let phase = (t / quarter).rem_euclid(4.0);
            let offset = match phase {
                p if p < 1.0 => p,
                p if p < 3.0 => 2.0 - p,
                p => p - 4.0,
            };
            let mut cmd = cfg.base;
            cmd[cfg.cable] += cfg.amplitude * offset;
            let frame = plant.step(&cmd, &[0.0; 3])?;
            if frame.fault {
                return Err(Error::InvalidConfig(format!("force cap exceeded at {speed} mm/s, t = {t:.2} s")));
            }
            let q = plant.cable_pos();
            trace.t.push(t);
            trace.q.push(q[cfg.cable]);
            trace.tension.push(frame.tension);
            trace.static_tension.push(plant_cfg.static_tension(&q)[cfg.cable]);
        }
        traces.push(trace);
    }
    Ok(RateStaticsReport { cable: cfg.cable, traces })
}

/// Writes `rate_statics.csv` (long format, one block per speed) and a summary.
pub fn run_rate_statics(cfg: &ExperimentConfig, out: &Path) -> Result<RateStaticsReport> {
    fs::create_dir_all(out)?;
    let report = rate_statics_traces(&cfg.plant, &cfg.rate_statics)?;
    let mut wr = csv::Writer::from_path(out.join("rate_statics.csv"))?;
    wr.write_record(["speed_mm_s", "t_s", "q_mm", "T1_N", "T2_N", "T3_N", "static_T_N"])?;
    for tr in &report.traces {
        for i in 0..tr.t.len() {
            let row = [
                tr.speed,
                tr.t[i],
                tr.q[i],
                tr.tension[i][0],
                tr.tension[i][1],
                tr.tension[i][2],
                tr.static_tension[i],
            ];
            wr.write_record(row.iter().map(|v| v.to_string()))?;
        }
    }
    wr.flush()?;
    let summary: Vec<_> = report
        .traces
        .iter()
        .map(|tr| {
            serde_json::json!({
                "speed_mm_s": tr.speed,
                "rows": tr.t.len(),
                "max_deviation_N": tr.max_deviation(report.cable),
            })
        })
        .collect();
    write_json(&out.join("rate_statics_summary.json"), &summary)?;
    Ok(report)
}
