use crate::error::{Error, Result};
use crate::geometry::{is_finite3, Vec3};

/// The last `n` actuator commands, newest first: `q_t, q_{t-dt}, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    q_seq: Vec<Vec3>,
    /// Sample spacing, s.
    pub dt: f64,
}

impl SequenceWindow {
    /// Builds a window from commands ordered newest first.
    pub fn newest_first(q_seq: Vec<Vec3>, dt: f64) -> Result<Self> {
        if q_seq.is_empty() {
            return Err(Error::Shape("empty sequence window".into()));
        }
        if !q_seq.iter().all(is_finite3) {
            return Err(Error::NonFinite("sequence window"));
        }
        Ok(Self { q_seq, dt })
    }

    /// Builds a window from commands ordered oldest first.
    pub fn from_history(history: &[Vec3], dt: f64) -> Result<Self> {
        Self::newest_first(history.iter().rev().copied().collect(), dt)
    }

    pub fn len(&self) -> usize {
        self.q_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_seq.is_empty()
    }

    pub fn newest(&self) -> &Vec3 {
        &self.q_seq[0]
    }

    pub fn newest_first_slice(&self) -> &[Vec3] {
        &self.q_seq
    }

    /// Commands in time order, oldest first.
    pub fn chronological(&self) -> impl Iterator<Item = &Vec3> + '_ {
        self.q_seq.iter().rev()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_newest_first() {
        let w = SequenceWindow::from_history(&[[1.0; 3], [2.0; 3], [3.0; 3]], 0.01).unwrap();
        assert_eq!(w.newest(), &[3.0; 3]);
        let chrono: Vec<_> = w.chronological().map(|q| q[0]).collect();
        assert_eq!(chrono, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SequenceWindow::from_history(&[[1.0, f64::NAN, 0.0]], 0.01).is_err());
        assert!(SequenceWindow::from_history(&[], 0.01).is_err());
    }
}
