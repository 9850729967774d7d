//! Actuator-space compliance: subtract the predicted internal tension from the
//! measurement and move each cable against the remaining external tension.

mod controller;
mod law;
mod telemetry;

pub use controller::{ControlOutput, Controller, ControllerConfig};
pub use law::{deadband_velocity, external_force, select_lambda, LAMBDA_PER_MEAN_ERROR};
pub use telemetry::{write_telemetry_csv, TelemetryRecord, TELEMETRY_HEADER};
