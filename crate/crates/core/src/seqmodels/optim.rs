use super::params::Gradients;
use crate::error::{Error, Result};

/// Classical (heavy-ball) momentum SGD: `v <- m v + g`, `θ <- θ - lr v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(learning_rate: f64, momentum: f64, n_params: usize) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        Ok(Self { learning_rate, momentum, velocity: vec![0.0; n_params] })
    }

    pub fn with_velocity(learning_rate: f64, momentum: f64, velocity: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(learning_rate, momentum, velocity.len())?;
        s.velocity = velocity;
        Ok(s)
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn step(&mut self, params: &mut [f64], grads: &Gradients) -> Result<()> {
        if params.len() != grads.0.len() || params.len() != self.velocity.len() {
            return Err(Error::Shape(format!(
                "optimizer holds {} slots, params {}, grads {}",
                self.velocity.len(),
                params.len(),
                grads.0.len()
            )));
        }
        if !grads.0.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(&grads.0) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
        Ok(())
    }
}

/// Exponential moving average of parameters, `a <- d a + (1 - d) θ`,
/// started at the initial parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAverage {
    decay: f64,
    values: Vec<f64>,
}

impl WeightAverage {
    pub fn new(decay: f64, initial: &[f64]) -> Result<Self> {
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::InvalidConfig("weight_average decay must lie in [0, 1)".into()));
        }
        Ok(Self { decay, values: initial.to_vec() })
    }

    pub fn update(&mut self, params: &[f64]) {
        let d = self.decay;
        for (a, p) in self.values.iter_mut().zip(params) {
            *a = d * *a + (1.0 - d) * p;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
