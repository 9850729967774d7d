use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::law::{deadband_velocity, external_force};
use crate::error::{Error, Result};
use crate::geometry::{is_finite3, Vec3};
use crate::robotsim::SensorFrame;
use crate::seqmodels::{SequenceWindow, TensionPredictor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Deadband half-width, N.
    pub lambda: f64,
    /// mm/s per N beyond the deadband.
    pub beta: f64,
    /// Hz
    pub rate: f64,
    /// Commands per predictor window.
    pub window_length: usize,
    /// mm/s
    pub velocity_cap: f64,
    /// mm
    pub actuation_range: f64,
    /// Predictor calls slower than this hold position. Off by default because
    /// wall-clock checks make runs non-reproducible.
    pub tick_budget_ms: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            beta: 2.0,
            rate: 100.0,
            window_length: 100,
            velocity_cap: 10.0,
            actuation_range: 63.0,
            tick_budget_ms: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("rate", self.rate),
            ("velocity_cap", self.velocity_cap),
            ("actuation_range", self.actuation_range),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("controller {name} must be positive, got {v}")));
            }
        }
        if self.window_length == 0 {
            return Err(Error::InvalidConfig("controller window_length must be positive".into()));
        }
        Ok(())
    }
}

/// Everything decided during one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Command to send for the next tick, mm.
    pub command: Vec3,
    /// Predicted internal tension, N; zero while warming up or on failure.
    pub f_int: Vec3,
    /// Estimated external tension, N.
    pub f_ext: Vec3,
    /// Commanded cable velocity, mm/s.
    pub velocity: Vec3,
    /// History was still filling and the position was held.
    pub warming_up: bool,
    /// The predictor failed or overran its budget and the position was held.
    pub predictor_fault: bool,
}

/// Compliance loop around a tension predictor.
#[derive(Debug, Clone)]
pub struct Controller<P> {
    cfg: ControllerConfig,
    predictor: P,
    history: VecDeque<Vec3>,
    q: Vec3,
    tick: u64,
    enabled: bool,
}

impl<P: TensionPredictor> Controller<P> {
    /// Controller holding `q0`. The predictor must consume exactly
    /// `cfg.window_length` commands.
    pub fn new(cfg: ControllerConfig, predictor: P, q0: Vec3) -> Result<Self> {
        cfg.validate()?;
        if predictor.window_len() != cfg.window_length {
            return Err(Error::InvalidConfig(format!(
                "predictor window {} differs from controller window {}",
                predictor.window_len(),
                cfg.window_length
            )));
        }
        if !is_finite3(&q0) {
            return Err(Error::NonFinite("initial command"));
        }
        let q = q0.map(|v| v.clamp(0.0, cfg.actuation_range));
        Ok(Self { history: VecDeque::with_capacity(cfg.window_length), cfg, predictor, q, tick: 0, enabled: true })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn command(&self) -> Vec3 {
        self.q
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// With compliance disabled the controller still estimates forces but
    /// never moves.
    pub fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
    }

    /// Consumes the frame produced by the last command and returns the next one.
    pub fn step(&mut self, frame: &SensorFrame) -> ControlOutput {
        self.tick += 1;
        let n = self.cfg.window_length;
        if self.history.len() < n {
            // Warm-up: record the held command until a full window exists.
            self.push(self.q);
            return ControlOutput {
                command: self.q,
                f_int: [0.0; 3],
                f_ext: [0.0; 3],
                velocity: [0.0; 3],
                warming_up: true,
                predictor_fault: false,
            };
        }
        let Some(f_int) = self.predict() else {
            self.push(self.q);
            return ControlOutput {
                command: self.q,
                f_int: [0.0; 3],
                f_ext: [0.0; 3],
                velocity: [0.0; 3],
                warming_up: false,
                predictor_fault: true,
            };
        };
        let f_ext = external_force(&frame.tension, &f_int);
        let c = &self.cfg;
        let velocity = if self.enabled {
            f_ext.map(|f| deadband_velocity(f, c.lambda, c.beta, c.velocity_cap))
        } else {
            [0.0; 3]
        };
        let dt = 1.0 / c.rate;
        for i in 0..3 {
            self.q[i] = (self.q[i] + velocity[i] * dt).clamp(0.0, c.actuation_range);
        }
        self.push(self.q);
        ControlOutput { command: self.q, f_int, f_ext, velocity, warming_up: false, predictor_fault: false }
    }

    fn push(&mut self, q: Vec3) {
        if self.history.len() == self.cfg.window_length {
            self.history.pop_front();
        }
        self.history.push_back(q);
    }

    fn predict(&self) -> Option<Vec3> {
        let newest_first: Vec<Vec3> = self.history.iter().rev().copied().collect();
        let window = SequenceWindow::newest_first(newest_first, 1.0 / self.cfg.rate).ok()?;
        let start = Instant::now();
        let pred = self.predictor.predict(&window).ok()?;
        if let Some(ms) = self.cfg.tick_budget_ms {
            if start.elapsed() > Duration::from_secs_f64(ms / 1000.0) {
                return None;
            }
        }
        is_finite3(&pred).then_some(pred)
    }
}
