//! Cable layout in the tip plane.
//!
//! The three cables sit 120 degrees apart. Cable 1 points along +y, cable 2
//! towards (-sqrt(3)/2, -1/2) and cable 3 towards (+sqrt(3)/2, -1/2). The same
//! 2x3 projection appears in the exploration transform and in the tip force
//! readout.

/// Per-cable 3-vector (positions in mm or tensions in N).
pub type Vec3 = [f64; 3];
/// Point or force in the tip plane.
pub type Vec2 = [f64; 2];

pub const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// Rows map cable quantities onto tip-plane x and y.
pub const PLANE_PROJECTION: [[f64; 3]; 2] = [[0.0, -HALF_SQRT3, HALF_SQRT3], [1.0, -0.5, -0.5]];

/// Applies [`PLANE_PROJECTION`] to a cable vector.
pub fn project(v: &Vec3) -> Vec2 {
    let p = &PLANE_PROJECTION;
    [
        p[0][0] * v[0] + p[0][1] * v[1] + p[0][2] * v[2],
        p[1][0] * v[0] + p[1][1] * v[1] + p[1][2] * v[2],
    ]
}

/// Applies the transpose of [`PLANE_PROJECTION`] to a planar vector.
pub fn project_transpose(f: &Vec2) -> Vec3 {
    let p = &PLANE_PROJECTION;
    [
        p[0][0] * f[0] + p[1][0] * f[1],
        p[0][1] * f[0] + p[1][1] * f[1],
        p[0][2] * f[0] + p[1][2] * f[1],
    ]
}

pub fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn is_finite3(a: &Vec3) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub fn norm2(a: &Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_sqrt3_is_exact_to_double_precision() {
        assert!((HALF_SQRT3 - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rows_annihilate_common_mode() {
        let p = project(&[4.2, 4.2, 4.2]);
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
    }

    #[test]
    fn projection_times_transpose_is_three_halves_identity() {
        for f in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
            let back = project(&project_transpose(&f));
            assert!((back[0] - 1.5 * f[0]).abs() < 1e-14);
            assert!((back[1] - 1.5 * f[1]).abs() < 1e-14);
        }
    }
}
