//! Tip-plane force readout from external cable tensions and calibration of
//! the coupling constant. The controller does not depend on this module.

mod calibrate;
mod force;

pub use calibrate::{run_calibration, write_report_csv, CalibrationConfig, CalibrationReport, REPORT_HEADER};
pub use force::{fit_alpha, tip_force, AlphaFit, CalibTrial, TipForce, COIN_MASS_KG, GRAVITY};
