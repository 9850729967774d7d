use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::PlantConfig;
use super::filter::lowpass_update;
use crate::error::{Error, Result};
use crate::geometry::{is_finite3, project, Vec2, Vec3};

/// Filtered tension reading delivered to the control loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    /// Per-cable filtered tension, N.
    pub tension: Vec3,
    /// Largest raw (pre-filter) sample seen during the tick, per cable.
    pub peak_raw: Vec3,
    /// A raw sample exceeded the force cap during this tick.
    pub fault: bool,
}

/// Hidden state of the simulated robot.
#[derive(Debug, Clone)]
pub struct PlantState {
    /// mm
    pub cable_pos: Vec3,
    /// mm/s, over the most recent fast-rate sample
    pub cable_vel: Vec3,
    /// Directional friction offset currently applied, N.
    pub hysteresis_state: Vec3,
    /// Overshoot-with-restitution component, N.
    pub transient_tension: Vec3,
    /// Lowpass filter output, N.
    pub filter_state: Vec3,
    pub tip_pose: Vec2,
    /// Control ticks taken since construction.
    pub tick: u64,
    rng: ChaCha8Rng,
}

impl PlantState {
    /// Plant resting at `q` with no transient and the filter settled on the
    /// unloaded static tension.
    pub fn at_rest(cfg: &PlantConfig, q: Vec3) -> Result<Self> {
        cfg.validate()?;
        if !is_finite3(&q) {
            return Err(Error::NonFinite("initial cable position"));
        }
        let q = q.map(|v| v.clamp(0.0, cfg.actuation_range));
        let stat = cfg.static_tension(&q);
        Ok(Self {
            cable_pos: q,
            cable_vel: [0.0; 3],
            hysteresis_state: [0.0; 3],
            transient_tension: [0.0; 3],
            filter_state: stat.map(|t| t.max(0.0)),
            tip_pose: tip_pose_of(&q, cfg.tip_scale),
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        })
    }

    /// Noise-free internal tension implied by the current state.
    pub fn internal_tension(&self, cfg: &PlantConfig) -> Vec3 {
        let stat = cfg.static_tension(&self.cable_pos);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = (stat[i]
                + self.hysteresis_state[i]
                + self.transient_tension[i]
                + cfg.viscous_coeff * self.cable_vel[i])
                .max(0.0);
        }
        out
    }

    /// Advances one control tick in place.
    pub fn step(&mut self, cfg: &PlantConfig, cmd: &Vec3, ext_tension: &Vec3) -> Result<SensorFrame> {
        if !is_finite3(cmd) {
            return Err(Error::NonFinite("actuator command"));
        }
        if !is_finite3(ext_tension) {
            return Err(Error::NonFinite("external tension"));
        }
        let substeps = cfg.substeps();
        let dt_ctrl = cfg.control_dt();
        let dt_fast = dt_ctrl / substeps as f64;
        let range = cfg.actuation_range;
        let decay = (-dt_fast / cfg.restitution_tau).exp();
        let noise_on = cfg.noise_std > 0.0;

        // Servo tracks the target linearly over the tick, subject to its rate limit.
        let mut vel = [0.0; 3];
        let mut blend = [1.0; 3];
        let mut target_off = [0.0; 3];
        for i in 0..3 {
            let goal = cmd[i].clamp(0.0, range);
            vel[i] = ((goal - self.cable_pos[i]) / dt_ctrl)
                .clamp(-cfg.actuator_rate_limit, cfg.actuator_rate_limit);
            let travel = (vel[i] * dt_fast).abs();
            blend[i] = (-travel / cfg.hysteresis_length).exp();
            target_off[i] = cfg.hysteresis_width * vel[i].signum();
        }

        let mut peak = [f64::NEG_INFINITY; 3];
        let mut fault = false;
        for _ in 0..substeps {
            let mut v_eff = [0.0; 3];
            for i in 0..3 {
                let prev = self.cable_pos[i];
                let next = (prev + vel[i] * dt_fast).clamp(0.0, range);
                self.cable_pos[i] = next;
                v_eff[i] = (next - prev) / dt_fast;
            }
            let stat = cfg.static_tension(&self.cable_pos);
            for i in 0..3 {
                let dv = v_eff[i] - self.cable_vel[i];
                self.cable_vel[i] = v_eff[i];
                self.transient_tension[i] =
                    self.transient_tension[i] * decay - cfg.overshoot_gain * dv;
                if v_eff[i] != 0.0 {
                    let target = if v_eff[i] == vel[i] {
                        target_off[i]
                    } else {
                        cfg.hysteresis_width * v_eff[i].signum()
                    };
                    let b = if v_eff[i] == vel[i] {
                        blend[i]
                    } else {
                        (-(v_eff[i] * dt_fast).abs() / cfg.hysteresis_length).exp()
                    };
                    self.hysteresis_state[i] = target - (target - self.hysteresis_state[i]) * b;
                }
                let mut internal = stat[i]
                    + self.hysteresis_state[i]
                    + self.transient_tension[i]
                    + cfg.viscous_coeff * v_eff[i];
                if noise_on {
                    let n: f64 = StandardNormal.sample(&mut self.rng);
                    internal += cfg.noise_std * n;
                }
                let raw = (internal.max(0.0) + ext_tension[i]).max(0.0);
                if raw > cfg.force_cap {
                    fault = true;
                }
                peak[i] = peak[i].max(raw);
                self.filter_state[i] = lowpass_update(self.filter_state[i], raw);
            }
        }
        if !is_finite3(&self.filter_state) {
            return Err(Error::NonFinite("filter state"));
        }
        self.tip_pose = tip_pose_of(&self.cable_pos, cfg.tip_scale);
        self.tick += 1;
        Ok(SensorFrame { tension: self.filter_state, peak_raw: peak, fault })
    }
}

/// Functional form of [`PlantState::step`]; `dt` must equal one control period.
pub fn plant_step(
    state: &PlantState,
    cfg: &PlantConfig,
    cmd: &Vec3,
    ext_tension: &Vec3,
    dt: f64,
) -> Result<(PlantState, SensorFrame)> {
    if (dt - cfg.control_dt()).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "dt {dt} does not match control period {}",
            cfg.control_dt()
        )));
    }
    let mut next = state.clone();
    let frame = next.step(cfg, cmd, ext_tension)?;
    Ok((next, frame))
}

/// Tip position in the tip plane from cable positions.
pub fn tip_pose_of(cable_pos: &Vec3, scale: f64) -> Vec2 {
    let p = project(cable_pos);
    [p[0] * scale, p[1] * scale]
}

/// Plant configuration bundled with its state.
#[derive(Debug, Clone)]
pub struct Plant {
    pub cfg: PlantConfig,
    pub state: PlantState,
}

impl Plant {
    pub fn at_rest(cfg: PlantConfig, q: Vec3) -> Result<Self> {
        let state = PlantState::at_rest(&cfg, q)?;
        Ok(Self { cfg, state })
    }

    pub fn step(&mut self, cmd: &Vec3, ext_tension: &Vec3) -> Result<SensorFrame> {
        self.state.step(&self.cfg, cmd, ext_tension)
    }

    pub fn cable_pos(&self) -> Vec3 {
        self.state.cable_pos
    }

    pub fn tip_pose(&self) -> Vec2 {
        self.state.tip_pose
    }
}
