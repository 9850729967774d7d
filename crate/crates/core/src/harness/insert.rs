//! Repeated insertion into a curved tube, with and without compliance.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::closed_loop;
use super::config::ExperimentConfig;
use super::exceedance::ExceedanceHistogram;
use super::pipeline::{controller_for, load_checkpoint, write_json};
use crate::compliance::{Controller, ControllerConfig};
use crate::error::{Error, Result};
use crate::explorer::{xyc_to_q, XycPoint};
use crate::geometry::{Vec2, Vec3};
use crate::robotsim::{tube_contact, Contact, Plant, PlantConfig, TubeGeometry};
use crate::seqmodels::TensionPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InsertConfig {
    /// Hold pose `(x, y, c)` the tip starts from.
    pub pose: [f64; 3],
    /// Lateral offset of the bend, mm.
    pub bend_amplitude: f64,
    /// Axial length of the bend, mm.
    pub bend_length: f64,
    /// Straight tube before and after the bend, mm.
    pub straight_length: f64,
    pub inner_radius: f64,
    /// N/mm
    pub contact_stiffness: f64,
    /// Insertion speed, mm/s.
    pub speed: f64,
    /// Travel per insertion, mm.
    pub stroke: f64,
    pub cycles: usize,
    /// Tip-force thresholds for the exceedance histogram, N.
    pub thresholds: Vec<f64>,
    /// Hold after the controller's window fills and before insertion, s.
    pub pre_hold: f64,
}

impl Default for InsertConfig {
    fn default() -> Self {
        Self {
            pose: [0.0, 0.0, 60.0],
            bend_amplitude: 19.0,
            bend_length: 120.0,
            straight_length: 60.0,
            inner_radius: 13.0,
            contact_stiffness: 1.0,
            speed: 29.0,
            stroke: 160.0,
            cycles: 10,
            thresholds: (1..=8).map(f64::from).collect(),
            pre_hold: 0.5,
        }
    }
}

impl InsertConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bend_length", self.bend_length),
            ("inner_radius", self.inner_radius),
            ("speed", self.speed),
            ("stroke", self.stroke),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("insert {name} must be positive, got {v}")));
            }
        }
        if self.cycles == 0 {
            return Err(Error::InvalidConfig("insert needs at least one cycle".into()));
        }
        if self.stroke > self.bend_length + self.straight_length {
            return Err(Error::InvalidConfig("insert stroke runs past the end of the tube".into()));
        }
        Ok(())
    }

    /// Centerline in tube coordinates; the bend starts at the origin.
    pub fn tube(&self) -> Result<TubeGeometry> {
        let mut pts = vec![[-self.straight_length, 0.0]];
        let segments = 120;
        for k in 0..=segments {
            let x = self.bend_length * k as f64 / segments as f64;
            pts.push([x, 0.5 * self.bend_amplitude * (1.0 - (2.0 * PI * x / self.bend_length).cos())]);
        }
        pts.push([self.bend_length + self.straight_length, 0.0]);
        TubeGeometry::new(pts, self.inner_radius, self.contact_stiffness)
    }

    /// Insertion depth at `t` seconds into the triangle wave, mm.
    pub fn depth_at(&self, t: f64) -> f64 {
        let half = self.stroke / self.speed;
        let phase = t.rem_euclid(2.0 * half);
        if phase <= half {
            self.speed * phase
        } else {
            self.stroke - self.speed * (phase - half)
        }
    }
}

/// One control tick of an insertion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertSample {
    pub t: f64,
    /// mm
    pub depth: f64,
    pub tip: Vec2,
    /// Force the tube applies to the tip, N.
    pub contact: Vec2,
    pub q: Vec3,
    pub f_ext: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertRun {
    pub compliance_enabled: bool,
    /// Largest contact force magnitude, N.
    pub peak_force: f64,
    /// Mean contact force over ticks in contact, N.
    pub mean_contact_force: f64,
    /// Tick at which a force-cap fault aborted the run.
    pub fault_tick: Option<usize>,
    /// One trial per insert/retract cycle.
    pub histogram: ExceedanceHistogram,
    #[serde(skip)]
    pub samples: Vec<InsertSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertReport {
    pub enabled: InsertRun,
    pub disabled: InsertRun,
}

impl InsertReport {
    pub fn peak_reduced(&self) -> bool {
        self.enabled.peak_force < self.disabled.peak_force
    }
}

/// Runs the insertion twice from identical initial conditions, once with
/// compliance on and once with it off.
pub fn insert_runs<P: TensionPredictor + Clone>(
    plant_cfg: &PlantConfig,
    ctrl_cfg: &ControllerConfig,
    predictor: &P,
    cfg: &InsertConfig,
) -> Result<InsertReport> {
    cfg.validate()?;
    let run = |enabled| insert_run(plant_cfg, ctrl_cfg, predictor, cfg, enabled);
    Ok(InsertReport { enabled: run(true)?, disabled: run(false)? })
}

fn insert_run<P: TensionPredictor + Clone>(
    plant_cfg: &PlantConfig,
    ctrl_cfg: &ControllerConfig,
    predictor: &P,
    cfg: &InsertConfig,
    enabled: bool,
) -> Result<InsertRun> {
    let dt = plant_cfg.control_dt();
    let tube = cfg.tube()?;
    let q0 = xyc_to_q(&XycPoint { x: cfg.pose[0], y: cfg.pose[1], c: cfg.pose[2] });
    let mut plant = Plant::at_rest(plant_cfg.clone(), q0)?;
    let mut ctrl = Controller::new(ctrl_cfg.clone(), predictor.clone(), q0)?;
    ctrl.set_enabled(enabled);
    let tip0 = plant.tip_pose();
    let coupling = plant_cfg.tip_coupling;

    let settle = ctrl_cfg.window_length + (cfg.pre_hold / dt).round() as usize;
    for _ in 0..settle {
        closed_loop::step(&mut plant, &mut ctrl, |_| Contact::default())?;
    }

    let cycle_ticks = (2.0 * cfg.stroke / cfg.speed / dt).round() as usize;
    let total = cycle_ticks * cfg.cycles;
    let mut samples = Vec::with_capacity(total);
    let mut fault_tick = None;
    for k in 0..total {
        let t = k as f64 * dt;
        let depth = cfg.depth_at(t);
        // The tube's bend start sits at the initial tip position when depth is zero.
        let placed = tube.translated([tip0[0] - depth, tip0[1]]);
        let tick = closed_loop::step(&mut plant, &mut ctrl, |tip| tube_contact(tip, &placed, coupling))?;
        samples.push(InsertSample {
            t,
            depth,
            tip: plant.tip_pose(),
            contact: tick.contact.force,
            q: plant.cable_pos(),
            f_ext: tick.out.f_ext,
        });
        if tick.frame.fault {
            fault_tick = Some(k);
            break;
        }
    }

    let forces: Vec<f64> = samples.iter().map(|s| s.contact[0].hypot(s.contact[1])).collect();
    let in_contact: Vec<f64> = forces.iter().copied().filter(|&f| f > 0.0).collect();
    Ok(InsertRun {
        compliance_enabled: enabled,
        peak_force: forces.iter().copied().fold(0.0, f64::max),
        mean_contact_force: in_contact.iter().sum::<f64>() / in_contact.len().max(1) as f64,
        fault_tick,
        histogram: ExceedanceHistogram::from_series(&forces, dt, cycle_ticks, &cfg.thresholds)?,
        samples,
    })
}

/// Insertion scenario with the trained checkpoint; writes per-tick traces for
/// both runs, the histogram and a summary.
pub fn run_insert(cfg: &ExperimentConfig, out: &Path) -> Result<InsertReport> {
    fs::create_dir_all(out)?;
    let ck = load_checkpoint(cfg, out)?;
    let q0 = xyc_to_q(&XycPoint { x: cfg.insert.pose[0], y: cfg.insert.pose[1], c: cfg.insert.pose[2] });
    let ctrl = controller_for(cfg, &ck, q0)?;
    let report = insert_runs(&cfg.plant, ctrl.config(), &ck.to_model()?, &cfg.insert)?;

    for run in [&report.enabled, &report.disabled] {
        let name = if run.compliance_enabled { "insert_enabled.csv" } else { "insert_disabled.csv" };
        let mut wr = csv::Writer::from_path(out.join(name))?;
        wr.write_record([
            "t_s", "depth_mm", "tip_x_mm", "tip_y_mm", "contact_fx_N", "contact_fy_N", "contact_N", "q1_mm",
            "q2_mm", "q3_mm", "Fext1_N", "Fext2_N", "Fext3_N",
        ])?;
        for s in &run.samples {
            let row = [
                s.t,
                s.depth,
                s.tip[0],
                s.tip[1],
                s.contact[0],
                s.contact[1],
                s.contact[0].hypot(s.contact[1]),
                s.q[0],
                s.q[1],
                s.q[2],
                s.f_ext[0],
                s.f_ext[1],
                s.f_ext[2],
            ];
            wr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
    }
    let mut wr = csv::Writer::from_path(out.join("insert_histogram.csv"))?;
    wr.write_record(["threshold_N", "enabled_mean_s", "disabled_mean_s"])?;
    for (i, th) in cfg.insert.thresholds.iter().enumerate() {
        wr.write_record([
            th.to_string(),
            report.enabled.histogram.mean_duration[i].to_string(),
            report.disabled.histogram.mean_duration[i].to_string(),
        ])?;
    }
    wr.flush()?;
    write_json(
        &out.join("insert_summary.json"),
        &serde_json::json!({
            "enabled": report.enabled,
            "disabled": report.disabled,
            "peak_reduced": report.peak_reduced(),
        }),
    )?;
    Ok(report)
}
