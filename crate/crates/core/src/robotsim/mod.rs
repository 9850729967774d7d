//! Discrete-time stand-in for the physical tendon robot.
//!
//! The plant turns commanded cable positions plus external loads into
//! filtered tension readings. Its hidden state carries directional
//! hysteresis, a decaying velocity-change transient and the sensor filter, so
//! the mapping from command history to tension is rate dependent.

mod config;
mod contact;
mod filter;
mod plant;

pub use config::{PlantConfig, StiffnessCurve};
pub use contact::{
    load_to_tensions, nearest_on_polyline, tube_contact, Contact, TubeGeometry, WallContact,
};
pub use filter::{lowpass_update, LOWPASS_INPUT_WEIGHT, LOWPASS_MEMORY_WEIGHT};
pub use plant::{plant_step, tip_pose_of, Plant, PlantState, SensorFrame};
