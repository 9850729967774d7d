use serde::{Deserialize, Serialize};

use crate::geometry::{project, project_transpose, PLANE_PROJECTION, Vec3, HALF_SQRT3};

/// Exploration coordinates: a plane position plus the summed cable position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XycPoint {
    pub x: f64,
    pub y: f64,
    pub c: f64,
}

/// Rows produce `x`, `y` and `c` from the three cable positions.
pub const XYC_MATRIX: [[f64; 3]; 3] = [PLANE_PROJECTION[0], PLANE_PROJECTION[1], [1.0, 1.0, 1.0]];

/// `3 * sqrt(3) / 2`.
pub const XYC_DETERMINANT: f64 = 3.0 * HALF_SQRT3;

pub fn q_to_xyc(q: &Vec3) -> XycPoint {
    let [x, y] = project(q);
    XycPoint { x, y, c: q[0] + q[1] + q[2] }
}

/// Inverse of [`q_to_xyc`].
///
/// The plane rows are orthogonal to `(1, 1, 1)` and satisfy `P P^T = 1.5 I`,
/// so `q = (2/3) P^T (x, y) + (c/3) (1, 1, 1)`.
pub fn xyc_to_q(p: &XycPoint) -> Vec3 {
    let lateral = project_transpose(&[p.x, p.y]);
    let common = p.c / 3.0;
    lateral.map(|l| 2.0 / 3.0 * l + common)
}
