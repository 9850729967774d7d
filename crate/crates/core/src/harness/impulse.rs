//! Step loads against a stiff wall, aligned at the tick the estimated
//! external tension first leaves the deadband.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::closed_loop;
use super::config::ExperimentConfig;
use super::pipeline::{controller_for, load_checkpoint, write_json};
use crate::compliance::{Controller, ControllerConfig};
use crate::error::{Error, Result};
use crate::explorer::{xyc_to_q, XycPoint};
use crate::geometry::{project_transpose, Vec2};
use crate::robotsim::{Contact, Plant, PlantConfig, WallContact};
use crate::seqmodels::TensionPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImpulseConfig {
    pub trials: usize,
    /// Peak external cable tension of the step, in multiples of the deadband.
    /// Trials are spread evenly over this range.
    pub magnitude_range: (f64, f64),
    /// Hold pose `(x, y, c)`.
    pub pose: [f64; 3],
    /// N/mm
    pub wall_stiffness: f64,
    /// Hold after the controller's window fills and before the step, s.
    pub pre_hold: f64,
    /// Trace kept before the trigger, s.
    pub record_before: f64,
    /// Trace kept after the trigger, s.
    pub record_after: f64,
    /// The triggered cable must be back inside the deadband this soon, s.
    pub recovery_deadline: f64,
    /// Half the excess must be gone this soon, s.
    pub halving_deadline: f64,
    /// Run the plant without sensor noise.
    pub noise_off: bool,
}

impl Default for ImpulseConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            magnitude_range: (2.0, 4.0),
            pose: [0.0, 0.0, 60.0],
            wall_stiffness: 5.0,
            pre_hold: 0.5,
            record_before: 0.2,
            record_after: 3.0,
            recovery_deadline: 2.0,
            halving_deadline: 0.5,
            noise_off: true,
        }
    }
}

impl ImpulseConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.magnitude_range;
        if self.trials == 0 || !(0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidConfig("impulse needs trials and an ordered magnitude range".into()));
        }
        if !(self.wall_stiffness > 0.0) {
            return Err(Error::InvalidConfig("impulse wall_stiffness must be positive".into()));
        }
        if !(self.record_after >= self.recovery_deadline && self.recovery_deadline >= self.halving_deadline) {
            return Err(Error::InvalidConfig("record_after must cover both deadlines".into()));
        }
        Ok(())
    }

    /// Step magnitude of trial `k` in multiples of the deadband.
    pub fn magnitude(&self, k: usize) -> f64 {
        let (lo, hi) = self.magnitude_range;
        if self.trials == 1 {
            return lo;
        }
        lo + (hi - lo) * k as f64 / (self.trials - 1) as f64
    }
}

/// Push direction of trial `k`, spread by the golden angle.
pub fn impulse_direction(k: usize) -> Vec2 {
    let a = k as f64 * PI * (3.0 - 5f64.sqrt());
    [a.cos(), a.sin()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseTrial {
    pub index: usize,
    /// Largest steady external cable tension the wall would produce, N.
    pub magnitude: f64,
    pub direction: Vec2,
    pub trigger_cable: Option<usize>,
    /// From step onset to trigger, s.
    pub trigger_delay: Option<f64>,
    /// Largest `|F_ext| - lambda` within the halving deadline, N.
    pub peak_excess: f64,
    /// `|F_ext| - lambda` at the halving deadline, N.
    pub excess_at_halving: f64,
    /// From trigger back to inside the deadband, s.
    pub recovery_time: Option<f64>,
    /// `None` for a zero-magnitude step, which is excluded.
    pub passed: Option<bool>,
    /// `|F_ext|` on the triggered cable from `record_before` ahead of the trigger.
    #[serde(skip)]
    pub trace: Vec<f64>,
    /// Contact force magnitude over the same span, N.
    #[serde(skip)]
    pub contact_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseReport {
    pub lambda: f64,
    pub trials: Vec<ImpulseTrial>,
    /// Seconds relative to the trigger for each trace sample.
    pub trace_time: Vec<f64>,
    pub mean_trace: Vec<f64>,
    pub mean_contact_trace: Vec<f64>,
    pub all_passed: bool,
}

/// Runs every trial from a fresh plant and controller.
pub fn impulse_trials<P: TensionPredictor + Clone>(
    plant_cfg: &PlantConfig,
    ctrl_cfg: &ControllerConfig,
    predictor: &P,
    cfg: &ImpulseConfig,
) -> Result<ImpulseReport> {
    cfg.validate()?;
    let mut plant_cfg = plant_cfg.clone();
    if cfg.noise_off {
        plant_cfg.noise_std = 0.0;
    }
    let dt = plant_cfg.control_dt();
    let lambda = ctrl_cfg.lambda;
    let before = (cfg.record_before / dt).round() as usize;
    let after = (cfg.record_after / dt).round() as usize;
    let halving = (cfg.halving_deadline / dt).round() as usize;
    let q0 = xyc_to_q(&XycPoint { x: cfg.pose[0], y: cfg.pose[1], c: cfg.pose[2] });

    let mut trials = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials {
        let magnitude = cfg.magnitude(k) * lambda;
        let direction = impulse_direction(k);
        let mut plant = Plant::at_rest(plant_cfg.clone(), q0)?;
        let mut ctrl = Controller::new(ctrl_cfg.clone(), predictor.clone(), q0)?;
        let free = |_: &Vec2| Contact::default();

        let mut pre: Vec<([f64; 3], f64)> = Vec::new();
        let settle = ctrl_cfg.window_length + (cfg.pre_hold / dt).round() as usize;
        for _ in 0..settle {
            let t = closed_loop::step(&mut plant, &mut ctrl, free)?;
            pre.push((t.out.f_ext, 0.0));
        }

        // The wall sits so that the step's largest cable tension equals `magnitude`.
        let tip0 = plant.tip_pose();
        let spread = project_transpose(&direction).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let depth = magnitude * 3.0 * plant_cfg.tip_coupling / (4.0 * cfg.wall_stiffness * spread);
        let wall = WallContact {
            point: [tip0[0] + depth * direction[0], tip0[1] + depth * direction[1]],
            normal: direction,
            stiffness: cfg.wall_stiffness,
        };
        let coupling = plant_cfg.tip_coupling;
        let contact = |tip: &Vec2| if magnitude > 0.0 { wall.contact(tip, coupling) } else { Contact::default() };

        let mut post: Vec<([f64; 3], f64)> = Vec::new();
        let mut trigger: Option<(usize, usize)> = None;
        // Untriggered trials stop after `after` ticks; triggered ones run `after` past the trigger.
        while post.len() <= trigger.map_or(after, |(tick, _)| tick + after) {
            let t = closed_loop::step(&mut plant, &mut ctrl, contact)?;
            if trigger.is_none() {
                if let Some(cable) = (0..3).filter(|&i| t.out.f_ext[i].abs() > lambda).max_by(|&a, &b| {
                    t.out.f_ext[a].abs().total_cmp(&t.out.f_ext[b].abs())
                }) {
                    trigger = Some((post.len(), cable));
                }
            }
            post.push((t.out.f_ext, t.contact.magnitude()));
        }

        let mut trial = ImpulseTrial {
            index: k,
            magnitude,
            direction,
            trigger_cable: None,
            trigger_delay: None,
            peak_excess: 0.0,
            excess_at_halving: 0.0,
            recovery_time: None,
            passed: (magnitude > 0.0).then_some(false),
            trace: Vec::new(),
            contact_trace: Vec::new(),
        };
        if let Some((tick, cable)) = trigger {
            let all: Vec<([f64; 3], f64)> = pre.iter().chain(post.iter()).copied().collect();
            let at = pre.len() + tick;
            let f = |i: usize| all[i].0[cable].abs();
            let (peak_i, peak) = (at..=at + halving)
                .map(|i| (i, f(i)))
                .fold((at, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            trial.trigger_cable = Some(cable);
            trial.trigger_delay = Some((tick + 1) as f64 * dt);
            trial.peak_excess = peak - lambda;
            trial.excess_at_halving = (f(at + halving) - lambda).max(0.0);
            trial.recovery_time = (peak_i..=at + after).find(|&i| f(i) <= lambda).map(|i| (i - at) as f64 * dt);
            let start = at.saturating_sub(before);
            trial.trace = (start..=at + after).map(f).collect();
            trial.contact_trace = (start..=at + after).map(|i| all[i].1).collect();
            if magnitude > 0.0 {
                trial.passed = Some(
                    trial.recovery_time.is_some_and(|r| r <= cfg.recovery_deadline + 1e-9)
                        && trial.excess_at_halving <= 0.5 * trial.peak_excess,
                );
            }
        }
        trials.push(trial);
    }

    let len = before + after + 1;
    let trace_time: Vec<f64> = (0..len).map(|i| (i as f64 - before as f64) * dt).collect();
    let aligned: Vec<&ImpulseTrial> = trials.iter().filter(|t| t.trace.len() == len).collect();
    let mean = |pick: fn(&ImpulseTrial) -> &Vec<f64>| -> Vec<f64> {
        (0..len)
            .map(|i| aligned.iter().map(|t| pick(t)[i]).sum::<f64>() / aligned.len().max(1) as f64)
            .collect()
    };
    let mean_trace = mean(|t| &t.trace);
    let mean_contact_trace = mean(|t| &t.contact_trace);
    let counted: Vec<bool> = trials.iter().filter_map(|t| t.passed).collect();
    let all_passed = !counted.is_empty() && counted.iter().all(|&p| p);
    Ok(ImpulseReport { lambda, trials, trace_time, mean_trace, mean_contact_trace, all_passed })
}

/// Impulse scenario with the trained checkpoint; writes traces, the mean
/// trace and a summary.
pub fn run_impulse(cfg: &ExperimentConfig, out: &Path) -> Result<ImpulseReport> {
    fs::create_dir_all(out)?;
    let ck = load_checkpoint(cfg, out)?;
    let q0 = xyc_to_q(&XycPoint { x: cfg.impulse.pose[0], y: cfg.impulse.pose[1], c: cfg.impulse.pose[2] });
    let ctrl = controller_for(cfg, &ck, q0)?;
    let report = impulse_trials(&cfg.plant, ctrl.config(), &ck.to_model()?, &cfg.impulse)?;

    let mut wr = csv::Writer::from_path(out.join("impulse_traces.csv"))?;
    wr.write_record(["trial", "t_rel_s", "fext_trigger_N", "contact_force_N"])?;
    for t in &report.trials {
        let offset = report.trace_time.len() - t.trace.len();
        for (i, (f, c)) in t.trace.iter().zip(&t.contact_trace).enumerate() {
            wr.write_record([
                t.index.to_string(),
                report.trace_time[offset + i].to_string(),
                f.to_string(),
                c.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    let mut wr = csv::Writer::from_path(out.join("impulse_mean.csv"))?;
    wr.write_record(["t_rel_s", "mean_fext_trigger_N", "mean_contact_force_N"])?;
    for i in 0..report.trace_time.len() {
        wr.write_record([
            report.trace_time[i].to_string(),
            report.mean_trace[i].to_string(),
            report.mean_contact_trace[i].to_string(),
        ])?;
    }
    wr.flush()?;
    write_json(
        &out.join("impulse_summary.json"),
        &serde_json::json!({ "lambda_N": report.lambda, "all_passed": report.all_passed, "trials": report.trials }),
    )?;
    Ok(report)
}
