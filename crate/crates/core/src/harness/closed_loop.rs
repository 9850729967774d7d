use crate::compliance::{ControlOutput, Controller};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::robotsim::{Contact, Plant, SensorFrame};
use crate::seqmodels::TensionPredictor;

/// One tick of plant plus controller.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoopTick {
    pub frame: SensorFrame,
    pub out: ControlOutput,
    /// Contact evaluated at the tip pose the tick started from.
    pub contact: Contact,
}

/// Sends the controller's current command with the contact load at the
/// present tip pose, then feeds the resulting frame back.
pub(crate) fn step<P: TensionPredictor>(
    plant: &mut Plant,
    ctrl: &mut Controller<P>,
    contact_at: impl Fn(&Vec2) -> Contact,
) -> Result<LoopTick> {
    let contact = contact_at(&plant.tip_pose());
    let frame = plant.step(&ctrl.command(), &contact.tensions)?;
    let out = ctrl.step(&frame);
    Ok(LoopTick { frame, out, contact })
}
