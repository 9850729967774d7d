//! Unloaded data collection: traverse the actuator space through the
//! `(x, y, c)` parametrization while learning where tensions stay usable.

mod collect;
mod dataset;
mod loess;
mod motion;
mod xyc;

pub use collect::{collect, CollectConfig, CollectOutcome};
pub use dataset::{Dataset, Record, CSV_HEADER};
pub use loess::{LoessFit, SurfaceAction, SurfaceUpdate, TensionSurface};
pub use motion::{MotionGenerator, MotionStyle, StyleRanges, Workspace};
pub use xyc::{q_to_xyc, xyc_to_q, XycPoint, XYC_DETERMINANT, XYC_MATRIX};
