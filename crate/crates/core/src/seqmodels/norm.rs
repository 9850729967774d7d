use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// Per-channel z-score statistics for inputs (mm) and targets (N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub input_mean: Vec3,
    pub input_std: Vec3,
    pub target_mean: Vec3,
    pub target_std: Vec3,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::identity()
    }
}

fn stats<'a>(rows: impl Iterator<Item = &'a Vec3> + Clone) -> (Vec3, Vec3) {
    let n = rows.clone().count().max(1) as f64;
    let mut mean = [0.0; 3];
    for r in rows.clone() {
        for i in 0..3 {
            mean[i] += r[i];
        }
    }
    mean = mean.map(|m| m / n);
    let mut var = [0.0; 3];
    for r in rows {
        for i in 0..3 {
            var[i] += (r[i] - mean[i]).powi(2);
        }
    }
    // Constant channels keep unit scale.
    let std = var.map(|v| {
        let s = (v / n).sqrt();
        if s > 1e-9 {
            s
        } else {
            1.0
        }
    });
    (mean, std)
}

impl Normalizer {
    pub fn identity() -> Self {
        Self { input_mean: [0.0; 3], input_std: [1.0; 3], target_mean: [0.0; 3], target_std: [1.0; 3] }
    }

    pub fn fit<'a>(
        inputs: impl Iterator<Item = &'a Vec3> + Clone,
        targets: impl Iterator<Item = &'a Vec3> + Clone,
    ) -> Self {
        let (input_mean, input_std) = stats(inputs);
        let (target_mean, target_std) = stats(targets);
        Self { input_mean, input_std, target_mean, target_std }
    }

    pub fn normalize_input(&self, q: &Vec3) -> Vec3 {
        std::array::from_fn(|i| (q[i] - self.input_mean[i]) / self.input_std[i])
    }

    pub fn normalize_target(&self, t: &Vec3) -> Vec3 {
        std::array::from_fn(|i| (t[i] - self.target_mean[i]) / self.target_std[i])
    }

    pub fn denormalize_target(&self, z: &Vec3) -> Vec3 {
        std::array::from_fn(|i| z[i] * self.target_std[i] + self.target_mean[i])
    }
}
