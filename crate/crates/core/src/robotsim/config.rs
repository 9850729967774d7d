use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear map from cable extension (mm) to static tension (N).
///
/// Outside the knot range the end segments are extended linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessCurve {
    /// `[extension_mm, tension_n]` knots, strictly increasing in extension.
    pub knots: Vec<[f64; 2]>,
}

impl StiffnessCurve {
    pub fn new(knots: Vec<[f64; 2]>) -> Result<Self> {
        let curve = Self { knots };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.len() < 2 {
            return Err(Error::InvalidConfig("stiffness curve needs at least two knots".into()));
        }
        for w in self.knots.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return Err(Error::InvalidConfig(
                    "stiffness curve extensions must be strictly increasing".into(),
                ));
            }
            if w[1][1] < w[0][1] {
                return Err(Error::InvalidConfig("stiffness curve must be non-decreasing".into()));
            }
        }
        if self.knots.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("stiffness curve has non-finite knots".into()));
        }
        Ok(())
    }

    pub fn eval(&self, extension: f64) -> f64 {
        let k = &self.knots;
        let seg = match k.iter().position(|p| p[0] > extension) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => k.len() - 2,
        };
        let (a, b) = (k[seg], k[seg + 1]);
        a[1] + (b[1] - a[1]) * (extension - a[0]) / (b[0] - a[0])
    }
}

impl Default for StiffnessCurve {
    fn default() -> Self {
        Self {
            knots: vec![
                [-10.0, 0.0],
                [0.0, 0.5],
                [5.0, 2.0],
                [10.0, 4.5],
                [15.0, 8.0],
                [20.0, 12.0],
                [30.0, 21.0],
                [45.0, 38.0],
                [63.0, 62.0],
            ],
        }
    }
}

/// Parameters of the simulated plant.
///
/// The default magnitudes are stand-ins chosen so unloaded tensions over the
/// explored workspace sit roughly between 2 and 15 N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    pub stiffness_curve: StiffnessCurve,
    /// Extension of cable i is `q_i - cross_coupling * mean(q_j, q_k)`.
    pub cross_coupling: f64,
    /// Directional friction offset, N.
    pub hysteresis_width: f64,
    /// Cable travel (mm) over which the friction offset swaps branch by 1/e.
    pub hysteresis_length: f64,
    /// Transient tension per unit velocity change, N per mm/s.
    pub overshoot_gain: f64,
    /// Decay time of the transient tension, s.
    pub restitution_tau: f64,
    /// N per mm/s.
    pub viscous_coeff: f64,
    /// Std of additive Gaussian noise on raw samples, N.
    pub noise_std: f64,
    /// mm/s.
    pub actuator_rate_limit: f64,
    /// mm.
    pub actuation_range: f64,
    /// Raw tension above this flags the frame, N.
    pub force_cap: f64,
    /// Hz.
    pub sample_rate_fast: f64,
    /// Hz.
    pub control_rate: f64,
    /// Ground-truth ratio between cable tension and tip-plane force.
    pub tip_coupling: f64,
    /// Tip-plane mm per unit of cable-space displacement.
    pub tip_scale: f64,
    pub rng_seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            stiffness_curve: StiffnessCurve::default(),
            cross_coupling: 0.5,
            hysteresis_width: 0.3,
            hysteresis_length: 3.0,
            overshoot_gain: 0.08,
            restitution_tau: 1.0,
            viscous_coeff: 0.03,
            noise_std: 0.05,
            actuator_rate_limit: 40.0,
            actuation_range: 63.0,
            force_cap: 65.0,
            sample_rate_fast: 20_000.0,
            control_rate: 100.0,
            tip_coupling: 1.0 / 3.04,
            tip_scale: 1.0,
            rng_seed: 0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        self.stiffness_curve.validate()?;
        let positive = [
            ("hysteresis_length", self.hysteresis_length),
            ("restitution_tau", self.restitution_tau),
            ("actuator_rate_limit", self.actuator_rate_limit),
            ("actuation_range", self.actuation_range),
            ("force_cap", self.force_cap),
            ("sample_rate_fast", self.sample_rate_fast),
            ("control_rate", self.control_rate),
            ("tip_coupling", self.tip_coupling),
            ("tip_scale", self.tip_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("hysteresis_width", self.hysteresis_width),
            ("overshoot_gain", self.overshoot_gain),
            ("viscous_coeff", self.viscous_coeff),
            ("noise_std", self.noise_std),
            ("cross_coupling", self.cross_coupling),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        let ratio = self.sample_rate_fast / self.control_rate;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::InvalidConfig(
                "control_rate must divide sample_rate_fast".into(),
            ));
        }
        Ok(())
    }

    /// Fast-rate samples per control tick.
    pub fn substeps(&self) -> usize {
        (self.sample_rate_fast / self.control_rate).round() as usize
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Static tension of each cable at positions `q`, before offsets.
    pub fn static_tension(&self, q: &[f64; 3]) -> [f64; 3] {
        let e = self.extensions(q);
        [
            self.stiffness_curve.eval(e[0]),
            self.stiffness_curve.eval(e[1]),
            self.stiffness_curve.eval(e[2]),
        ]
    }

    pub fn extensions(&self, q: &[f64; 3]) -> [f64; 3] {
        let rho = self.cross_coupling;
        [
            q[0] - rho * 0.5 * (q[1] + q[2]),
            q[1] - rho * 0.5 * (q[0] + q[2]),
            q[2] - rho * 0.5 * (q[0] + q[1]),
        ]
    }
}
