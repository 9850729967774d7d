//! Penalty contact models used by the scenarios.
//!
//! A load acting on the tip is turned into external cable tensions with the
//! plant's ground-truth coupling. A push along a cable's direction stretches
//! that cable, so a tip load `L` maps to `-(4 / 3 alpha) * P^T L`, where `P`
//! is the tip-plane projection. The tip-force readout then returns the
//! reaction `-L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm2, project_transpose, Vec2, Vec3};

/// Result of a contact query.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Contact {
    /// Force the environment applies to the tip, N.
    pub force: Vec2,
    /// Penetration depth, mm.
    pub depth: f64,
    /// Equivalent external cable tensions, N.
    pub tensions: Vec3,
}

impl Contact {
    fn none() -> Self {
        Self { force: [0.0; 2], depth: 0.0, tensions: [0.0; 3] }
    }

    pub fn magnitude(&self) -> f64 {
        norm2(&self.force)
    }
}

/// External cable tensions produced by a tip load.
pub fn load_to_tensions(load: &Vec2, tip_coupling: f64) -> Vec3 {
    let k = -4.0 / (3.0 * tip_coupling);
    project_transpose(load).map(|t| k * t)
}

/// A tube whose cross-section the tip must stay inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeGeometry {
    /// Polyline in the tip plane, mm.
    pub centerline: Vec<Vec2>,
    /// mm
    pub inner_radius: f64,
    /// N/mm
    pub contact_stiffness: f64,
}

impl TubeGeometry {
    pub fn new(centerline: Vec<Vec2>, inner_radius: f64, contact_stiffness: f64) -> Result<Self> {
        let t = Self { centerline, inner_radius, contact_stiffness };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centerline.len() < 2 {
            return Err(Error::InvalidConfig("tube centerline needs at least two points".into()));
        }
        if !(self.inner_radius > 0.0) {
            return Err(Error::InvalidConfig("tube inner_radius must be positive".into()));
        }
        if !(self.contact_stiffness >= 0.0) {
            return Err(Error::InvalidConfig("tube contact_stiffness must be >= 0".into()));
        }
        Ok(())
    }

    /// Same tube moved by `offset` in the tip plane.
    pub fn translated(&self, offset: Vec2) -> Self {
        Self {
            centerline: self.centerline.iter().map(|p| [p[0] + offset[0], p[1] + offset[1]]).collect(),
            ..self.clone()
        }
    }
}

/// Closest point to `p` on a polyline.
pub fn nearest_on_polyline(p: &Vec2, line: &[Vec2]) -> Vec2 {
    let mut best = line[0];
    let mut best_d2 = f64::INFINITY;
    for seg in line.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = c;
        }
    }
    best
}

/// Wall contact between the tip and the tube.
///
/// The normal force points from the wall back toward the centerline and grows
/// linearly with penetration beyond the inner radius.
pub fn tube_contact(tip: &Vec2, tube: &TubeGeometry, tip_coupling: f64) -> Contact {
    let c = nearest_on_polyline(tip, &tube.centerline);
    let to_center = [c[0] - tip[0], c[1] - tip[1]];
    let dist = norm2(&to_center);
    let depth = dist - tube.inner_radius;
    if depth <= 0.0 || dist == 0.0 {
        return Contact::none();
    }
    let mag = tube.contact_stiffness * depth;
    let force = [mag * to_center[0] / dist, mag * to_center[1] / dist];
    Contact { force, depth, tensions: load_to_tensions(&force, tip_coupling) }
}

/// Flat obstacle: the half-plane behind `point`, facing along `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallContact {
    pub point: Vec2,
    /// Unit vector pointing out of the wall.
    pub normal: Vec2,
    /// N/mm
    pub stiffness: f64,
}

impl WallContact {
    pub fn contact(&self, tip: &Vec2, tip_coupling: f64) -> Contact {
        let s = (tip[0] - self.point[0]) * self.normal[0] + (tip[1] - self.point[1]) * self.normal[1];
        if s >= 0.0 {
            return Contact::none();
        }
        let depth = -s;
        let force = [self.stiffness * depth * self.normal[0], self.stiffness * depth * self.normal[1]];
        Contact { force, depth, tensions: load_to_tensions(&force, tip_coupling) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project;

    fn straight() -> TubeGeometry {
        TubeGeometry::new(vec![[-50.0, 0.0], [50.0, 0.0]], 13.0, 10.0).unwrap()
    }

    #[test]
    fn centerline_tip_has_no_contact() {
        let c = tube_contact(&[3.0, 0.0], &straight(), 1.0 / 3.0);
        assert_eq!(c.tensions, [0.0; 3]);
        assert_eq!(c.magnitude(), 0.0);
    }

    #[test]
    fn half_mm_penetration_gives_five_newtons() {
        let c = tube_contact(&[0.0, 13.5], &straight(), 1.0 / 3.0);
        assert!((c.magnitude() - 5.0).abs() < 1e-12);
        assert!((c.depth - 0.5).abs() < 1e-12);
    }

    #[test]
    fn force_points_toward_centerline() {
        let tube = TubeGeometry::new(vec![[0.0, 0.0], [10.0, 10.0], [30.0, 10.0]], 2.0, 3.0).unwrap();
        for tip in [[0.0, 8.0], [20.0, 15.0], [20.0, 4.0], [12.0, 20.0], [-5.0, -5.0]] {
            let c = tube_contact(&tip, &tube, 0.3);
            let near = nearest_on_polyline(&tip, &tube.centerline);
            let to_center = [near[0] - tip[0], near[1] - tip[1]];
            assert!(c.force[0] * to_center[0] + c.force[1] * to_center[1] > 0.0, "{tip:?}");
        }
    }

    #[test]
    fn tensions_reproduce_reaction_through_projection() {
        let alpha = 1.0 / 3.04;
        let load = [0.7, -1.2];
        let t = load_to_tensions(&load, alpha);
        let f = project(&t);
        assert!((alpha / 2.0 * f[0] + load[0]).abs() < 1e-12);
        assert!((alpha / 2.0 * f[1] + load[1]).abs() < 1e-12);
    }

    #[test]
    fn wall_penalty() {
        let wall = WallContact { point: [0.0, 1.0], normal: [0.0, -1.0], stiffness: 2.0 };
        assert_eq!(wall.contact(&[0.0, 0.5], 0.3).magnitude(), 0.0);
        let c = wall.contact(&[0.0, 1.5], 0.3);
        assert!((c.force[1] + 1.0).abs() < 1e-12);
        // Pushing toward -y stretches cable 1.
        assert!(c.tensions[0] > 0.0 && c.tensions[1] < 0.0 && c.tensions[2] < 0.0);
    }

    #[test]
    fn geometry_validation() {
        assert!(TubeGeometry::new(vec![[0.0, 0.0]], 13.0, 1.0).is_err());
        assert!(TubeGeometry::new(vec![[0.0, 0.0], [1.0, 0.0]], 0.0, 1.0).is_err());
    }
}
