use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{is_finite3, project, Vec2, Vec3};

pub const GRAVITY: f64 = 9.81;
/// One calibration coin, kg.
pub const COIN_MASS_KG: f64 = 0.009;

/// Planar force at the tip, N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipForce {
    pub fx: f64,
    pub fy: f64,
}

impl TipForce {
    pub fn magnitude(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

/// Tip-plane force carried by external tensions: `(alpha / 2) * P * T`.
///
/// The result is the force the cables exert on the tip, i.e. the reaction to
/// an applied load.
pub fn tip_force(tensions: &Vec3, alpha: f64) -> TipForce {
    let [x, y] = project(tensions);
    TipForce { fx: 0.5 * alpha * x, fy: 0.5 * alpha * y }
}

/// One loaded hold used for calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibTrial {
    pub pose_id: usize,
    /// Magnitude of the applied load, N.
    pub applied_force: f64,
    /// Unit direction of the applied load in the tip plane.
    pub direction: Vec2,
    /// Mean external tension over the hold, N.
    pub measured_ext_tensions: Vec3,
}

impl CalibTrial {
    /// Tip force the readout should report: the reaction to the load.
    pub fn expected_tip_force(&self) -> Vec2 {
        [-self.applied_force * self.direction[0], -self.applied_force * self.direction[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Root mean square of the per-trial force residual norm, N.
    pub rms_residual: f64,
    pub trials: usize,
}

/// Scalar least squares for `alpha` over both planar components of every trial.
pub fn fit_alpha(trials: &[CalibTrial]) -> Result<AlphaFit> {
    if trials.len() < 2 {
        return Err(Error::Calibration("need at least two trials".into()));
    }
    if trials.iter().all(|t| t.applied_force == 0.0) {
        return Err(Error::Calibration("all applied forces are zero".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for t in trials {
        if !(t.applied_force >= 0.0) || !is_finite3(&t.measured_ext_tensions) {
            return Err(Error::Calibration(format!("invalid trial at pose {}", t.pose_id)));
        }
        let u = project(&t.measured_ext_tensions).map(|v| 0.5 * v);
        let f = t.expected_tip_force();
        num += u[0] * f[0] + u[1] * f[1];
        den += u[0] * u[0] + u[1] * u[1];
    }
    if den <= 0.0 {
        return Err(Error::Calibration("measured tensions carry no planar component".into()));
    }
    let alpha = num / den;
    let sq: f64 = trials
        .iter()
        .map(|t| {
            let p = tip_force(&t.measured_ext_tensions, alpha);
            let f = t.expected_tip_force();
            (p.fx - f[0]).powi(2) + (p.fy - f[1]).powi(2)
        })
        .sum();
    Ok(AlphaFit { alpha, rms_residual: (sq / trials.len() as f64).sqrt(), trials: trials.len() })
}
