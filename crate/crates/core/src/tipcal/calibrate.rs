//! Simulated coin-weight calibration.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::force::{fit_alpha, tip_force, AlphaFit, CalibTrial, COIN_MASS_KG, GRAVITY};
use crate::compliance::external_force;
use crate::error::{Error, Result};
use crate::explorer::{xyc_to_q, XycPoint};
use crate::geometry::{Vec2, Vec3};
use crate::robotsim::{load_to_tensions, Plant, PlantConfig};
use crate::seqmodels::{SequenceWindow, TensionPredictor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Hold poses in exploration coordinates `(x, y, c)`.
    pub poses: Vec<[f64; 3]>,
    /// Coins per load level.
    pub coin_counts: Vec<u32>,
    /// Repetitions per level; repetition `k` loads along `k * direction_step_deg`.
    pub repetitions: usize,
    pub direction_step_deg: f64,
    /// Loaded time before averaging starts, s.
    pub settle_time: f64,
    /// Averaging window, s.
    pub average_time: f64,
    /// Subtract each pose's unloaded reading from its loaded trials, which
    /// removes a constant prediction bias at that pose.
    pub tare: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            poses: vec![[0.0, 0.0, 90.0], [3.0, 2.0, 90.0], [-2.0, -3.0, 92.0]],
            coin_counts: vec![3, 6, 9, 12, 15],
            repetitions: 6,
            direction_step_deg: 60.0,
            settle_time: 0.5,
            average_time: 1.0,
            tare: true,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.poses.is_empty() || self.coin_counts.is_empty() || self.repetitions == 0 {
            return Err(Error::InvalidConfig("calibration needs poses, load levels and repetitions".into()));
        }
        if !(self.average_time > 0.0 && self.settle_time >= 0.0) {
            return Err(Error::InvalidConfig("calibration times must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub trials: Vec<CalibTrial>,
    /// One unloaded hold per pose, excluded from the fit.
    pub zero_load: Vec<CalibTrial>,
    /// Trials dropped because the plant hit its force cap.
    pub discarded: usize,
    pub fit: AlphaFit,
    pub ground_truth_alpha: f64,
    pub relative_error: f64,
}

/// Holds each pose, hangs each load in each direction and records the
/// external tension averaged over `average_time`.
pub fn run_calibration<P: TensionPredictor>(
    plant_cfg: &PlantConfig,
    predictor: &P,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    cfg.validate()?;
    let n = predictor.window_len();
    let dt = plant_cfg.control_dt();
    let settle = (cfg.settle_time / dt).round() as usize;
    let average = ((cfg.average_time / dt).round() as usize).max(1);
    let mut trials = Vec::new();
    let mut zero_load = Vec::new();
    let mut discarded = 0;

    for (pose_id, p) in cfg.poses.iter().enumerate() {
        let q = xyc_to_q(&XycPoint { x: p[0], y: p[1], c: p[2] }).map(|v| v.clamp(0.0, plant_cfg.actuation_range));
        let mut plant = Plant::at_rest(plant_cfg.clone(), q)?;
        let mut history: VecDeque<Vec3> = VecDeque::with_capacity(n);
        // Fill the window and let the plant settle unloaded.
        for _ in 0..n.max(settle) {
            plant.step(&q, &[0.0; 3])?;
            push(&mut history, q, n);
        }
        let window = SequenceWindow::newest_first(history.iter().rev().copied().collect(), dt)?;
        let f_int = predictor.predict(&window)?;

        let mut hold = |load: Vec2| -> Result<Option<Vec3>> {
            let ext = load_to_tensions(&load, plant_cfg.tip_coupling);
            let mut sum = [0.0; 3];
            let mut fault = false;
            for k in 0..settle + average {
                let frame = plant.step(&q, &ext)?;
                fault |= frame.fault;
                if k >= settle {
                    let e = external_force(&frame.tension, &f_int);
                    for i in 0..3 {
                        sum[i] += e[i];
                    }
                }
            }
            // Unload and recover before the next trial.
            for _ in 0..settle {
                plant.step(&q, &[0.0; 3])?;
            }
            Ok((!fault).then(|| sum.map(|s| s / average as f64)))
        };

        let mut offset = [0.0; 3];
        match hold([0.0, 0.0])? {
            Some(t) => {
                if cfg.tare {
                    offset = t;
                }
                zero_load.push(CalibTrial { pose_id, applied_force: 0.0, direction: [0.0, 1.0], measured_ext_tensions: t });
            }
            None => discarded += 1,
        }
        for &coins in &cfg.coin_counts {
            let magnitude = coins as f64 * COIN_MASS_KG * GRAVITY;
            for rep in 0..cfg.repetitions {
                let a = (rep as f64 * cfg.direction_step_deg).to_radians();
                let direction = [a.cos(), a.sin()];
                match hold([magnitude * direction[0], magnitude * direction[1]])? {
                    Some(t) => {
                        let measured_ext_tensions = [t[0] - offset[0], t[1] - offset[1], t[2] - offset[2]];
                        trials.push(CalibTrial { pose_id, applied_force: magnitude, direction, measured_ext_tensions });
                    }
                    None => discarded += 1,
                }
            }
        }
    }
    let fit = fit_alpha(&trials)?;
    let truth = plant_cfg.tip_coupling;
    Ok(CalibrationReport {
        trials,
        zero_load,
        discarded,
        fit,
        ground_truth_alpha: truth,
        relative_error: (fit.alpha - truth).abs() / truth,
    })
}

fn push(history: &mut VecDeque<Vec3>, q: Vec3, n: usize) {
    if history.len() == n {
        history.pop_front();
    }
    history.push_back(q);
}

pub const REPORT_HEADER: [&str; 11] =
    ["kind", "pose_id", "applied_force_N", "dir_x", "dir_y", "Fext1_N", "Fext2_N", "Fext3_N", "Fx_N", "Fy_N", "alpha"];

/// Trial rows (`kind = zero` or `trial`) read out with the fitted alpha.
pub fn write_report_csv<W: Write>(w: W, report: &CalibrationReport) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(REPORT_HEADER)?;
    let alpha = report.fit.alpha;
    for (kind, rows) in [("zero", &report.zero_load), ("trial", &report.trials)] {
        for t in rows.iter() {
            let f = tip_force(&t.measured_ext_tensions, alpha);
            let e = t.measured_ext_tensions;
            wr.write_record([
                kind.to_string(),
                t.pose_id.to_string(),
                t.applied_force.to_string(),
                t.direction[0].to_string(),
                t.direction[1].to_string(),
                e[0].to_string(),
                e[1].to_string(),
                e[2].to_string(),
                f.fx.to_string(),
                f.fy.to_string(),
                alpha.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Perfect internal-tension model for a plant held still: static curve
    /// plus the settled hysteresis offset, which is zero from rest.
    struct RestOracle(PlantConfig, usize);

    impl TensionPredictor for RestOracle {
        fn window_len(&self) -> usize {
            self.1
        }
        fn predict(&self, w: &SequenceWindow) -> Result<Vec3> {
            Ok(self.0.static_tension(w.newest()))
        }
    }

    #[test]
    fn oracle_predictor_recovers_alpha() {
        let pc = PlantConfig { noise_std: 0.05, ..Default::default() };
        let report = run_calibration(&pc, &RestOracle(pc.clone(), 10), &CalibrationConfig::default()).unwrap();
        assert_eq!(report.trials.len(), 3 * 5 * 6);
        assert_eq!(report.zero_load.len(), 3);
        assert!(report.relative_error < 0.01, "{report:?}");
        for z in &report.zero_load {
            assert!(z.measured_ext_tensions.iter().all(|v| v.abs() < 0.05));
        }
    }

    struct BiasedOracle(PlantConfig, Vec3);

    impl TensionPredictor for BiasedOracle {
        fn window_len(&self) -> usize {
            5
        }
        fn predict(&self, w: &SequenceWindow) -> Result<Vec3> {
            let t = self.0.static_tension(w.newest());
            Ok([t[0] + self.1[0], t[1] + self.1[1], t[2] + self.1[2]])
        }
    }

    #[test]
    fn tare_removes_constant_prediction_bias() {
        let pc = PlantConfig { noise_std: 0.0, ..Default::default() };
        let oracle = BiasedOracle(pc.clone(), [1.5, -1.0, -0.5]);
        let tared = run_calibration(&pc, &oracle, &CalibrationConfig::default()).unwrap();
        assert!(tared.relative_error < 0.01, "{}", tared.relative_error);
        let raw = run_calibration(&pc, &oracle, &CalibrationConfig { tare: false, ..Default::default() }).unwrap();
        assert!(raw.relative_error > 0.05, "{}", raw.relative_error);
    }

    #[test]
    fn doubling_load_doubles_force() {
        let pc = PlantConfig { noise_std: 0.0, ..Default::default() };
        let cfg = CalibrationConfig { poses: vec![[0.0, 0.0, 90.0]], coin_counts: vec![5, 10], repetitions: 1, ..Default::default() };
        let report = run_calibration(&pc, &RestOracle(pc.clone(), 5), &cfg).unwrap();
        let f1 = tip_force(&report.trials[0].measured_ext_tensions, pc.tip_coupling).magnitude();
        let f2 = tip_force(&report.trials[1].measured_ext_tensions, pc.tip_coupling).magnitude();
        assert!((f2 / f1 - 2.0).abs() < 1e-6, "{f1} {f2}");
    }

    #[test]
    fn report_csv_has_header_and_rows() {
        let pc = PlantConfig { noise_std: 0.0, ..Default::default() };
        let cfg = CalibrationConfig { poses: vec![[0.0, 0.0, 90.0]], coin_counts: vec![5], repetitions: 2, ..Default::default() };
        let report = run_calibration(&pc, &RestOracle(pc.clone(), 5), &cfg).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 2);
        assert!(text.starts_with("kind,pose_id,applied_force_N"));
    }
}
