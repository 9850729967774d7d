//! Learned safe-tension surface `c(x, y)` queried with local linear LOESS.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::xyc::q_to_xyc;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Ratio of smallest to largest eigenvalue below which the local fit is
/// treated as rank deficient.
const CONDITION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoessFit {
    pub c: f64,
    /// The local design was rank deficient and `c` is a weighted mean.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensionSurface {
    samples: Vec<[f64; 3]>,
    cells: HashMap<(i64, i64), usize>,
    pub neighbors: usize,
    /// Samples closer than this in `(x, y)` share a slot; the newest `c` wins.
    pub grid_tolerance: f64,
}

impl TensionSurface {
    pub fn new(neighbors: usize, grid_tolerance: f64) -> Result<Self> {
        if neighbors < 3 {
            return Err(Error::InvalidConfig("LOESS needs at least 3 neighbors".into()));
        }
        if !(grid_tolerance > 0.0) {
            return Err(Error::InvalidConfig("grid_tolerance must be positive".into()));
        }
        Ok(Self { samples: Vec::new(), cells: HashMap::new(), neighbors, grid_tolerance })
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn insert(&mut self, x: f64, y: f64, c: f64) {
        let key = ((x / self.grid_tolerance).round() as i64, (y / self.grid_tolerance).round() as i64);
        match self.cells.get(&key) {
            Some(&i) => self.samples[i] = [x, y, c],
            None => {
                self.cells.insert(key, self.samples.len());
                self.samples.push([x, y, c]);
            }
        }
    }

    /// Degree-1 LOESS with tricube weights over the `neighbors` nearest samples.
    ///
    /// Distances are normalized by the farthest neighbor, which therefore gets
    /// zero weight.
    pub fn query(&self, x: f64, y: f64) -> Result<LoessFit> {
        let k = self.neighbors;
        if self.samples.len() < k {
            return Err(Error::InvalidConfig(format!(
                "surface has {} samples, LOESS needs {k}",
                self.samples.len()
            )));
        }
        let mut near: Vec<(f64, usize)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| ((s[0] - x).hypot(s[1] - y), i))
            .collect();
        near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.truncate(k);
        let d_max = near.iter().map(|n| n.0).fold(0.0, f64::max);

        let mut xtwx = Matrix3::<f64>::zeros();
        let mut xtwy = Vector3::<f64>::zeros();
        let (mut w_sum, mut wc_sum) = (0.0, 0.0);
        for &(d, i) in &near {
            let w = if d_max > 0.0 { tricube(d / d_max) } else { 1.0 };
            let s = self.samples[i];
            let row = Vector3::new(1.0, s[0] - x, s[1] - y);
            xtwx += w * row * row.transpose();
            xtwy += w * s[2] * row;
            w_sum += w;
            wc_sum += w * s[2];
        }
        if w_sum <= 0.0 {
            // Every neighbor sits at the normalizing distance.
            let mean = near.iter().map(|&(_, i)| self.samples[i][2]).sum::<f64>() / k as f64;
            return Ok(LoessFit { c: mean, degenerate: true });
        }
        let eig = xtwx.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if hi <= 0.0 || lo / hi < CONDITION_FLOOR {
            return Ok(LoessFit { c: wc_sum / w_sum, degenerate: true });
        }
        match xtwx.cholesky() {
            Some(ch) => Ok(LoessFit { c: ch.solve(&xtwy)[0], degenerate: false }),
            None => Ok(LoessFit { c: wc_sum / w_sum, degenerate: true }),
        }
    }

    /// Applies the tension rule to one measurement taken at cable positions `q`.
    ///
    /// All cables inside the target range records `(x, y, c)`. Otherwise nothing
    /// is recorded and `c` should move: down if any cable is above range
    /// (takes precedence), up if any is below.
    pub fn update(&mut self, q: &Vec3, tension: &Vec3, rule: &SurfaceUpdate) -> SurfaceAction {
        let (lo, hi) = rule.target_range;
        if tension.iter().any(|&t| t > hi) {
            return SurfaceAction::Lower(rule.step);
        }
        if tension.iter().any(|&t| t < lo) {
            return SurfaceAction::Raise(rule.step);
        }
        let p = q_to_xyc(q);
        self.insert(p.x, p.y, p.c);
        SurfaceAction::Recorded
    }
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        (1.0 - u * u * u).powi(3)
    }
}

/// Tension window the explorer aims for and how fast `c` moves toward it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceUpdate {
    /// N
    pub target_range: (f64, f64),
    /// Adjustment of `c` per out-of-range measurement, mm.
    pub step: f64,
}

impl Default for SurfaceUpdate {
    fn default() -> Self {
        Self { target_range: (2.0, 12.0), step: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceAction {
    Recorded,
    Raise(f64),
    Lower(f64),
}

impl SurfaceAction {
    /// Signed change to apply to `c`.
    pub fn delta(&self) -> f64 {
        match *self {
            SurfaceAction::Recorded => 0.0,
            SurfaceAction::Raise(s) => s,
            SurfaceAction::Lower(s) => -s,
        }
    }
}
