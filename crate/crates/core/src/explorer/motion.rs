//! Random target pursuit in the exploration plane.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Heading wander never exceeds this angle from the target bearing.
const MAX_WANDER: f64 = std::f64::consts::FRAC_PI_3;

/// Disk of reachable `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub center: Vec2,
    pub radius: f64,
}

impl Workspace {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidConfig("workspace radius must be positive".into()));
        }
        Ok(())
    }

    /// Targets count as reached within 2% of the workspace diameter.
    pub fn arrival_radius(&self) -> f64 {
        0.02 * 2.0 * self.radius
    }

    fn clamp(&self, p: Vec2) -> Vec2 {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        if r <= self.radius {
            p
        } else {
            let s = self.radius / r;
            [self.center[0] + d[0] * s, self.center[1] + d[1] * s]
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        let r = self.radius * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        [self.center[0] + r * a.cos(), self.center[1] + r * a.sin()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionStyle {
    /// Path speed, units/s.
    pub velocity: f64,
    /// Largest heading wander rate, rad/s.
    pub jerkiness: f64,
    /// Chance per tick of starting a pause.
    pub pause_probability: f64,
    /// Pause length bounds, s.
    pub pause_duration: (f64, f64),
    /// Time before the style is re-rolled, s.
    pub epoch_length: f64,
}

impl MotionStyle {
    pub fn validate(&self) -> Result<()> {
        if !(self.velocity > 0.0) {
            return Err(Error::InvalidConfig("style velocity must be positive".into()));
        }
        if !(self.jerkiness >= 0.0) {
            return Err(Error::InvalidConfig("jerkiness must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.pause_probability) {
            return Err(Error::InvalidConfig("pause_probability must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.pause_duration;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig("pause_duration must be an ordered non-negative range".into()));
        }
        if !(self.epoch_length > 0.0) {
            return Err(Error::InvalidConfig("epoch_length must be positive".into()));
        }
        Ok(())
    }
}

/// Uniform ranges from which a fresh [`MotionStyle`] is drawn each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleRanges {
    pub velocity: (f64, f64),
    pub jerkiness: (f64, f64),
    pub pause_probability: (f64, f64),
    /// Bounds on the longest pause of a style, s; the shortest is 10% of it.
    pub pause_duration: (f64, f64),
    pub epoch_length: f64,
}

impl Default for StyleRanges {
    fn default() -> Self {
        Self {
            velocity: (0.5, 12.0),
            jerkiness: (0.0, 3.0),
            pause_probability: (0.0, 0.01),
            pause_duration: (0.3, 3.0),
            epoch_length: 20.0,
        }
    }
}

fn draw<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

impl StyleRanges {
    /// Ranges that always produce `style`.
    pub fn fixed(style: MotionStyle) -> Self {
        Self {
            velocity: (style.velocity, style.velocity),
            jerkiness: (style.jerkiness, style.jerkiness),
            pause_probability: (style.pause_probability, style.pause_probability),
            pause_duration: (style.pause_duration.1, style.pause_duration.1),
            epoch_length: style.epoch_length,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> MotionStyle {
        let longest = draw(rng, self.pause_duration);
        MotionStyle {
            velocity: draw(rng, self.velocity),
            jerkiness: draw(rng, self.jerkiness),
            pause_probability: draw(rng, self.pause_probability),
            pause_duration: (0.1 * longest, longest),
            epoch_length: self.epoch_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("velocity", self.velocity),
            ("jerkiness", self.jerkiness),
            ("pause_probability", self.pause_probability),
            ("pause_duration", self.pause_duration),
        ] {
            if !(lo <= hi) {
                return Err(Error::InvalidConfig(format!("{name} range is not ordered")));
            }
        }
        let probe = MotionStyle {
            velocity: self.velocity.0,
            jerkiness: self.jerkiness.0,
            pause_probability: self.pause_probability.1,
            pause_duration: (0.1 * self.pause_duration.0, self.pause_duration.1),
            epoch_length: self.epoch_length,
        };
        probe.validate()
    }
}

/// Per-tick waypoint stream chasing random targets inside a [`Workspace`].
#[derive(Debug, Clone)]
pub struct MotionGenerator {
    workspace: Workspace,
    ranges: StyleRanges,
    style: MotionStyle,
    dt: f64,
    pos: Vec2,
    target: Vec2,
    wander: f64,
    pause_left: f64,
    style_age: f64,
}

impl MotionGenerator {
    pub fn new<R: Rng>(workspace: Workspace, ranges: StyleRanges, dt: f64, start: Vec2, rng: &mut R) -> Result<Self> {
        workspace.validate()?;
        ranges.validate()?;
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig("motion dt must be positive".into()));
        }
        let style = ranges.sample(rng);
        let target = workspace.sample(rng);
        Ok(Self {
            workspace,
            ranges,
            style,
            dt,
            pos: workspace.clamp(start),
            target,
            wander: 0.0,
            pause_left: 0.0,
            style_age: 0.0,
        })
    }

    pub fn style(&self) -> &MotionStyle {
        &self.style
    }

    pub fn target(&self) -> Vec2 {
        self.target
    }

    pub fn position(&self) -> Vec2 {
        self.pos
    }

    /// Moves the pursuer to `p` and drops any pause in progress.
    pub fn reset_to(&mut self, p: Vec2) {
        self.pos = self.workspace.clamp(p);
        self.pause_left = 0.0;
        self.wander = 0.0;
    }

    pub fn next<R: Rng>(&mut self, rng: &mut R) -> Vec2 {
        self.style_age += self.dt;
        if self.style_age >= self.style.epoch_length {
            self.style_age = 0.0;
            self.style = self.ranges.sample(rng);
        }
        if self.pause_left > 0.0 {
            self.pause_left -= self.dt;
            return self.pos;
        }
        if self.style.pause_probability > 0.0 && rng.gen::<f64>() < self.style.pause_probability {
            let (lo, hi) = self.style.pause_duration;
            self.pause_left = draw(rng, (lo, hi)) - self.dt;
            return self.pos;
        }

        let to_target = [self.target[0] - self.pos[0], self.target[1] - self.pos[1]];
        let dist = to_target[0].hypot(to_target[1]);
        let step = self.style.velocity * self.dt;
        if self.style.jerkiness > 0.0 {
            let rate = self.style.jerkiness * self.dt;
            self.wander = (self.wander + rng.gen_range(-rate..=rate)).clamp(-MAX_WANDER, MAX_WANDER);
        }
        if dist <= step {
            self.pos = self.target;
        } else {
            let heading = to_target[1].atan2(to_target[0]) + self.wander;
            let next = [self.pos[0] + step * heading.cos(), self.pos[1] + step * heading.sin()];
            self.pos = self.workspace.clamp(next);
        }
        if (self.target[0] - self.pos[0]).hypot(self.target[1] - self.pos[1]) <= self.workspace.arrival_radius() {
            self.target = self.workspace.sample(rng);
            self.wander = 0.0;
        }
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn style(velocity: f64, jerkiness: f64, pause_probability: f64) -> MotionStyle {
        MotionStyle { velocity, jerkiness, pause_probability, pause_duration: (0.5, 2.0), epoch_length: 20.0 }
    }

    const DISK: Workspace = Workspace { center: [0.0, 0.0], radius: 10.0 };

    #[test]
    fn zero_jerkiness_moves_in_straight_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = MotionGenerator::new(DISK, StyleRanges::fixed(style(5.0, 0.0, 0.0)), 0.01, [0.0, 0.0], &mut rng).unwrap();
        let mut start = g.position();
        let mut target = g.target();
        let mut segments = 0;
        for _ in 0..5000 {
            let p = g.next(&mut rng);
            let (u, v) = ([p[0] - start[0], p[1] - start[1]], [target[0] - start[0], target[1] - start[1]]);
            assert!((u[0] * v[1] - u[1] * v[0]).abs() < 1e-9, "left the line toward the target");
            if g.target() != target {
                start = p;
                target = g.target();
                segments += 1;
            }
        }
        assert!(segments > 5);
    }

    #[test]
    fn certain_pauses_freeze_the_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut st = style(5.0, 1.0, 1.0);
        st.pause_duration = (2.0, 2.0);
        let mut g = MotionGenerator::new(DISK, StyleRanges::fixed(st), 0.01, [1.0, 2.0], &mut rng).unwrap();
        for _ in 0..5000 {
            assert_eq!(g.next(&mut rng), [1.0, 2.0]);
        }
    }

    #[test]
    fn speed_never_exceeds_style_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = MotionGenerator::new(DISK, StyleRanges::default(), 0.01, [0.0, 0.0], &mut rng).unwrap();
        let mut prev = g.position();
        for _ in 0..20_000 {
            let p = g.next(&mut rng);
            let speed = (p[0] - prev[0]).hypot(p[1] - prev[1]) / 0.01;
            assert!(speed <= g.style().velocity + 1e-9);
            assert!(p[0].hypot(p[1]) <= DISK.radius + 1e-9);
            prev = p;
        }
    }

    #[test]
    fn style_rerolls_each_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = MotionGenerator::new(DISK, StyleRanges::default(), 0.01, [0.0, 0.0], &mut rng).unwrap();
        let first = *g.style();
        for _ in 0..1999 {
            g.next(&mut rng);
        }
        assert_eq!(*g.style(), first);
        g.next(&mut rng);
        assert_ne!(*g.style(), first);
    }

    #[test]
    fn invalid_styles_rejected() {
        assert!(style(0.0, 1.0, 0.1).validate().is_err());
        assert!(style(1.0, -1.0, 0.1).validate().is_err());
        assert!(style(1.0, 1.0, 1.5).validate().is_err());
        assert!(Workspace { center: [0.0, 0.0], radius: 0.0 }.validate().is_err());
    }
}
