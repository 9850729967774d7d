/// Weight on the previous filter output.
pub const LOWPASS_MEMORY_WEIGHT: f64 = 255.0 / 256.0;
/// Weight on the new raw sample.
pub const LOWPASS_INPUT_WEIGHT: f64 = 1.0 / 256.0;

/// First-order IIR smoothing applied to every raw tension sample.
#[inline]
pub fn lowpass_update(y_prev: f64, x: f64) -> f64 {
    LOWPASS_MEMORY_WEIGHT * y_prev + LOWPASS_INPUT_WEIGHT * x
}
