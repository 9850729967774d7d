use serde::{Deserialize, Serialize};

/// Name, shape and position of one tensor inside a flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered list of named tensors packed back to back.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParamLayout {
    pub tensors: Vec<TensorSpec>,
}

impl ParamLayout {
    pub(crate) fn push(&mut self, name: &str, shape: &[usize]) -> usize {
        let offset = self.total();
        self.tensors.push(TensorSpec { name: name.to_string(), shape: shape.to_vec(), offset });
        offset
    }

    pub fn total(&self) -> usize {
        self.tensors.last().map_or(0, |t| t.offset + t.len())
    }

    pub fn get(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

/// Gradient buffer laid out exactly like the parameters it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|g| *g *= s);
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescales to Euclidean norm `max` if the norm exceeds it; returns
    /// whether it did.
    pub fn clip_norm(&mut self, max: f64) -> bool {
        let n = self.norm();
        if n > max {
            self.scale(max / n);
            true
        } else {
            false
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_norm_rescales_only_above_limit() {
        let mut g = Gradients(vec![3.0, 4.0]);
        assert!(!g.clip_norm(5.0));
        assert_eq!(g.0, vec![3.0, 4.0]);
        assert!(g.clip_norm(1.0));
        assert!((g.0[0] - 0.6).abs() < 1e-15 && (g.0[1] - 0.8).abs() < 1e-15);
    }
}
