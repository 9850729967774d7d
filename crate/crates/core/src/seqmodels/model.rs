use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cnn::{CnnCache, CnnParams};
use super::lstm::{LstmCache, LstmParams};
use super::norm::Normalizer;
use super::params::{Gradients, ParamLayout};
use super::window::SequenceWindow;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Anything that maps a command window to predicted internal tension.
pub trait TensionPredictor {
    /// Number of commands the predictor consumes.
    fn window_len(&self) -> usize;
    fn predict(&self, window: &SequenceWindow) -> Result<Vec3>;
}

/// Architecture and size of a predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Lstm { hidden: usize },
    Cnn { layers: usize, kernel: usize, filters: usize },
}

impl ModelKind {
    pub fn init<R: Rng>(&self, rng: &mut R) -> Result<Network> {
        Ok(match *self {
            ModelKind::Lstm { hidden } => Network::Lstm(LstmParams::init(hidden, rng)),
            ModelKind::Cnn { layers, kernel, filters } => Network::Cnn(CnnParams::init(layers, kernel, filters, rng)?),
        })
    }

    pub fn zeros(&self) -> Result<Network> {
        Ok(match *self {
            ModelKind::Lstm { hidden } => Network::Lstm(LstmParams::zeros(hidden)),
            ModelKind::Cnn { layers, kernel, filters } => Network::Cnn(CnnParams::zeros(layers, kernel, filters)?),
        })
    }

    pub fn from_values(&self, values: Vec<f64>) -> Result<Network> {
        Ok(match *self {
            ModelKind::Lstm { hidden } => Network::Lstm(LstmParams::from_values(hidden, values)?),
            ModelKind::Cnn { layers, kernel, filters } => {
                Network::Cnn(CnnParams::from_values(layers, kernel, filters, values)?)
            }
        })
    }

    /// Shortest window this architecture accepts.
    pub fn min_window(&self) -> usize {
        match *self {
            ModelKind::Lstm { .. } => 1,
            ModelKind::Cnn { layers, kernel, .. } => layers * (kernel.max(1) - 1) + 1,
        }
    }

    /// Short name in the style `LSTM-64` (hidden size) or `CNN-64` (kernel size).
    pub fn label(&self) -> String {
        match *self {
            ModelKind::Lstm { hidden } => format!("LSTM-{hidden}"),
            ModelKind::Cnn { kernel, .. } => format!("CNN-{kernel}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Lstm(LstmParams),
    Cnn(CnnParams),
}

#[derive(Debug, Clone)]
pub enum ForwardCache {
    Lstm(LstmCache),
    Cnn(CnnCache),
}

impl Network {
    pub fn forward(&self, inputs: &[Vec3]) -> Result<(Vec3, ForwardCache)> {
        match self {
            Network::Lstm(p) => p.forward(inputs).map(|(o, c)| (o, ForwardCache::Lstm(c))),
            Network::Cnn(p) => p.forward(inputs).map(|(o, c)| (o, ForwardCache::Cnn(c))),
        }
    }

    pub fn backward(&self, cache: &ForwardCache, d_out: &Vec3) -> Result<Gradients> {
        match (self, cache) {
            (Network::Lstm(p), ForwardCache::Lstm(c)) => p.backward(c, d_out),
            (Network::Cnn(p), ForwardCache::Cnn(c)) => p.backward(c, d_out),
            _ => Err(Error::StaleCache("cache belongs to a different architecture".into())),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Network::Lstm(p) => p.values(),
            Network::Cnn(p) => p.values(),
        }
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        match self {
            Network::Lstm(p) => p.values_mut(),
            Network::Cnn(p) => p.values_mut(),
        }
    }

    pub fn layout(&self) -> ParamLayout {
        match self {
            Network::Lstm(p) => p.layout(),
            Network::Cnn(p) => p.layout(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Network::Lstm(p) => ModelKind::Lstm { hidden: p.hidden() },
            Network::Cnn(p) => ModelKind::Cnn { layers: p.layers(), kernel: p.kernel(), filters: p.filters() },
        }
    }
}

/// A network together with its input length and normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: Network,
    pub window_len: usize,
    pub norm: Normalizer,
}

impl Model {
    pub fn new(net: Network, window_len: usize, norm: Normalizer) -> Result<Self> {
        let min = net.kind().min_window();
        if window_len < min {
            return Err(Error::WindowTooShort { len: window_len, required: min });
        }
        Ok(Self { net, window_len, norm })
    }

    pub fn kind(&self) -> ModelKind {
        self.net.kind()
    }

    /// Normalized network input from commands ordered oldest first.
    pub fn encode(&self, history: &[Vec3]) -> Vec<Vec3> {
        history.iter().map(|q| self.norm.normalize_input(q)).collect()
    }

    /// Prediction in newtons from commands ordered oldest first.
    pub fn predict_history(&self, history: &[Vec3]) -> Result<Vec3> {
        if history.len() != self.window_len {
            return Err(Error::Shape(format!(
                "model expects {} commands, got {}",
                self.window_len,
                history.len()
            )));
        }
        let (z, _) = self.net.forward(&self.encode(history))?;
        Ok(self.norm.denormalize_target(&z))
    }
}

impl TensionPredictor for Model {
    fn window_len(&self) -> usize {
        self.window_len
    }

    fn predict(&self, window: &SequenceWindow) -> Result<Vec3> {
        let history: Vec<Vec3> = window.chronological().copied().collect();
        self.predict_history(&history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn labels() {
        assert_eq!(ModelKind::Lstm { hidden: 64 }.label(), "LSTM-64");
        assert_eq!(ModelKind::Cnn { layers: 3, kernel: 32, filters: 16 }.label(), "CNN-32");
    }

    #[test]
    fn cnn_model_rejects_short_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kind = ModelKind::Cnn { layers: 3, kernel: 64, filters: 4 };
        let net = kind.init(&mut rng).unwrap();
        assert!(Model::new(net.clone(), 100, Normalizer::identity()).is_err());
        assert!(Model::new(net, 200, Normalizer::identity()).is_ok());
    }

    #[test]
    fn predictor_uses_chronological_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ModelKind::Lstm { hidden: 4 }.init(&mut rng).unwrap();
        let model = Model::new(net, 5, Normalizer::identity()).unwrap();
        let hist: Vec<Vec3> = (0..5).map(|i| [i as f64 * 0.1, 0.2, -0.1]).collect();
        let w = SequenceWindow::from_history(&hist, 0.01).unwrap();
        assert_eq!(model.predict(&w).unwrap(), model.predict_history(&hist).unwrap());
        assert!(model.predict_history(&hist[1..]).is_err());
    }
}
