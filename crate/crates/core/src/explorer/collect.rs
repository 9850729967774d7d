use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record};
use super::loess::{SurfaceAction, SurfaceUpdate, TensionSurface};
use super::motion::{MotionGenerator, StyleRanges, Workspace};
use super::xyc::{xyc_to_q, XycPoint};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::robotsim::Plant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    /// Recorded time, s. Recovery after a fault is not counted.
    pub duration: f64,
    pub workspace: Workspace,
    pub styles: StyleRanges,
    pub surface: SurfaceUpdate,
    pub loess_neighbors: usize,
    pub grid_tolerance: f64,
    /// `c` at the safe pose and before the surface has enough samples, mm.
    pub initial_c: f64,
    /// Cable speed while returning to the safe pose, mm/s.
    pub recovery_speed: f64,
    /// Unrecorded hold at the safe pose before a session starts, ticks.
    pub settle_ticks: usize,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            duration: 1200.0,
            workspace: Workspace { center: [0.0, 0.0], radius: 8.0 },
            styles: StyleRanges::default(),
            surface: SurfaceUpdate::default(),
            loess_neighbors: 25,
            grid_tolerance: 0.25,
            initial_c: 60.0,
            recovery_speed: 10.0,
            settle_ticks: 100,
            seed: 0,
        }
    }
}

impl CollectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidConfig("collection duration must be positive".into()));
        }
        if !(self.recovery_speed > 0.0) {
            return Err(Error::InvalidConfig("recovery_speed must be positive".into()));
        }
        let (lo, hi) = self.surface.target_range;
        if !(lo < hi && self.surface.step > 0.0) {
            return Err(Error::InvalidConfig("target_range must be ordered and step positive".into()));
        }
        self.workspace.validate()?;
        self.styles.validate()
    }
}

#[derive(Debug, Clone)]
pub struct CollectOutcome {
    pub dataset: Dataset,
    pub surface: TensionSurface,
    /// Force-cap faults, each of which started a new session.
    pub faults: usize,
    /// Share of records with some tension outside the target range.
    pub out_of_range_fraction: f64,
}

/// Records unloaded motion of `plant` driven through the exploration plane.
///
/// Each record pairs the command sent at a tick with the frame that tick
/// produced.
pub fn collect(plant: &mut Plant, cfg: &CollectConfig) -> Result<CollectOutcome> {
    cfg.validate()?;
    let rate = plant.cfg.control_rate;
    let dt = plant.cfg.control_dt();
    let range = plant.cfg.actuation_range;
    let target = (cfg.duration * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut surface = TensionSurface::new(cfg.loess_neighbors, cfg.grid_tolerance)?;
    let safe_xy = cfg.workspace.center;
    let safe_q = clamp_range(xyc_to_q(&XycPoint { x: safe_xy[0], y: safe_xy[1], c: cfg.initial_c }), range);
    let mut motion = MotionGenerator::new(cfg.workspace, cfg.styles, dt, safe_xy, &mut rng)?;

    let mut data = Dataset::new(rate);
    let mut tick: u64 = 0;
    let mut session: u32 = 0;
    let mut faults = 0;
    let mut out_of_range = 0usize;
    let mut c_base = cfg.initial_c;
    let mut c_bias = 0.0;

    tick += return_to(plant, safe_q, cfg)?;
    while data.len() < target {
        let [x, y] = motion.next(&mut rng);
        if let Ok(fit) = surface.query(x, y) {
            c_base = fit.c;
        }
        let q = clamp_range(xyc_to_q(&XycPoint { x, y, c: c_base + c_bias }), range);
        let frame = plant.step(&q, &[0.0; 3])?;
        if frame.fault {
            faults += 1;
            if !data.is_empty() && data.records().last().map(|r| r.session) == Some(session) {
                session += 1;
            }
            tick += 1 + return_to(plant, safe_q, cfg)?;
            motion.reset_to(safe_xy);
            c_bias = 0.0;
            continue;
        }
        data.push(Record { t: tick as f64 / rate, q, tension: frame.tension, session })?;
        tick += 1;
        let (lo, hi) = cfg.surface.target_range;
        if frame.tension.iter().any(|&t| t < lo || t > hi) {
            out_of_range += 1;
        }
        match surface.update(&q, &frame.tension, &cfg.surface) {
            SurfaceAction::Recorded => c_bias = 0.0,
            a => c_bias += a.delta(),
        }
    }
    let out_of_range_fraction = out_of_range as f64 / data.len().max(1) as f64;
    Ok(CollectOutcome { dataset: data, surface, faults, out_of_range_fraction })
}

fn clamp_range(q: Vec3, range: f64) -> Vec3 {
    q.map(|v| v.clamp(0.0, range))
}

/// Ramps the plant to `safe_q` and holds it; returns the ticks spent.
fn return_to(plant: &mut Plant, safe_q: Vec3, cfg: &CollectConfig) -> Result<u64> {
    let max_step = cfg.recovery_speed * plant.cfg.control_dt();
    let mut q = plant.cable_pos();
    let mut ticks = 0u64;
    let mut held = 0usize;
    // Bounded so a fault at the safe pose itself cannot loop forever.
    let limit = 100_000u64;
    while held < cfg.settle_ticks {
        let mut moving = false;
        for i in 0..3 {
            let d = safe_q[i] - q[i];
            if d.abs() > max_step {
                moving = true;
            }
            q[i] += d.clamp(-max_step, max_step);
        }
        let frame = plant.step(&q, &[0.0; 3])?;
        ticks += 1;
        held = if moving || frame.fault { 0 } else { held + 1 };
        if ticks > limit {
            return Err(Error::Dataset("plant faults persist at the safe pose".into()));
        }
    }
    Ok(ticks)
}
