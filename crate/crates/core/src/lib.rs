//! Simulation lab for model-less compliant motion control of a three-tendon
//! continuum robot.
//!
//! * [`robotsim`] simulated plant with hysteresis, transients and sensor filtering
//! * [`seqmodels`] LSTM and CNN tension predictors trained from scratch
//! * [`explorer`] unloaded data collection over the actuator space
//! * [`compliance`] deadband actuator-space compliance controller
//! * [`tipcal`] tip-plane force readout and coupling calibration
//! * [`harness`] configuration, persistence and scripted experiments

pub mod compliance;
pub mod error;
pub mod explorer;
pub mod geometry;
pub mod harness;
pub mod robotsim;
pub mod seqmodels;
pub mod tipcal;

pub use error::{Error, Result};
