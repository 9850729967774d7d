use crate::geometry::Vec3;

/// Mean squared error over the three cable outputs.
pub fn mse_loss(pred: &Vec3, target: &Vec3) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / 3.0
}

/// Gradient of [`mse_loss`] with respect to `pred`.
pub fn mse_grad(pred: &Vec3, target: &Vec3) -> Vec3 {
    [
        2.0 * (pred[0] - target[0]) / 3.0,
        2.0 * (pred[1] - target[1]) / 3.0,
        2.0 * (pred[2] - target[2]) / 3.0,
    ]
}
