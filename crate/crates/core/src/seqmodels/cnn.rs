//! Temporal CNN baseline: `L` valid convolutions with ReLU, read out at the
//! newest position, then the same linear head as the LSTM (filters -> 32 -> 3).
//! The readout sees exactly the last `L * (k - 1) + 1` commands.

use rand::Rng;

use super::lstm::HEAD_WIDTH;
use super::math::{axpy, dot};
use super::params::{Gradients, ParamLayout};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const INPUTS: usize = 3;
const OUTPUTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    layers: usize,
    kernel: usize,
    filters: usize,
    values: Vec<f64>,
    generation: u64,
}

/// Activations kept by [`CnnParams::forward`].
#[derive(Debug, Clone)]
pub struct CnnCache {
    generation: u64,
    /// Input of each layer, channel-major; entry 0 is the network input.
    acts: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    lens: Vec<usize>,
    /// Last-layer activations at the newest position.
    readout: Vec<f64>,
    head: Vec<f64>,
    pub output: Vec3,
}

impl CnnParams {
    fn channels_in(&self, layer: usize) -> usize {
        if layer == 0 {
            INPUTS
        } else {
            self.filters
        }
    }

    fn build_layout(layers: usize, kernel: usize, filters: usize) -> ParamLayout {
        let mut l = ParamLayout::default();
        for layer in 0..layers {
            let cin = if layer == 0 { INPUTS } else { filters };
            l.push(&format!("conv{}_w", layer + 1), &[filters, cin, kernel]);
            l.push(&format!("conv{}_b", layer + 1), &[filters]);
        }
        l.push("W_fc1", &[HEAD_WIDTH, filters]);
        l.push("b_fc1", &[HEAD_WIDTH]);
        l.push("W_fc2", &[OUTPUTS, HEAD_WIDTH]);
        l.push("b_fc2", &[OUTPUTS]);
        l
    }

    pub fn zeros(layers: usize, kernel: usize, filters: usize) -> Result<Self> {
        if layers == 0 || kernel == 0 || filters == 0 {
            return Err(Error::Shape("CNN needs at least one layer, kernel and filter".into()));
        }
        let total = Self::build_layout(layers, kernel, filters).total();
        Ok(Self { layers, kernel, filters, values: vec![0.0; total], generation: 0 })
    }

    /// Uniform weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng>(layers: usize, kernel: usize, filters: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(layers, kernel, filters)?;
        let layout = p.layout();
        for t in &layout.tensors {
            if t.shape.len() < 2 {
                continue;
            }
            let fan_in: usize = t.shape[1..].iter().product();
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut p.values[t.range()] {
                *v = rng.gen_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn from_values(layers: usize, kernel: usize, filters: usize, values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(layers, kernel, filters)?;
        if values.len() != p.values.len() {
            return Err(Error::Shape(format!(
                "CNN needs {} values, got {}",
                p.values.len(),
                values.len()
            )));
        }
        p.values = values;
        Ok(p)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    /// Longest context the stack can see, `L (k - 1)` ticks beyond the newest.
    pub fn receptive_field(&self) -> usize {
        self.layers * (self.kernel - 1)
    }

    /// Shortest window the valid convolutions accept.
    pub fn min_window(&self) -> usize {
        self.receptive_field() + 1
    }

    pub fn layout(&self) -> ParamLayout {
        Self::build_layout(self.layers, self.kernel, self.filters)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access; invalidates caches taken before the call.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.values
    }

    fn conv_offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = 0;
        for l in 0..layer {
            off += self.filters * self.channels_in(l) * self.kernel + self.filters;
        }
        let w = off;
        let b = w + self.filters * self.channels_in(layer) * self.kernel;
        (w, b)
    }

    fn head_offsets(&self) -> (usize, usize, usize, usize) {
        let (w, b) = self.conv_offsets(self.layers - 1);
        let w1 = b + self.filters;
        let b1 = w1 + HEAD_WIDTH * self.filters;
        let w2 = b1 + HEAD_WIDTH;
        let b2 = w2 + OUTPUTS * HEAD_WIDTH;
        let _ = w;
        (w1, b1, w2, b2)
    }

    /// Runs the stack on normalized inputs, oldest first.
    pub fn forward(&self, inputs: &[Vec3]) -> Result<(Vec3, CnnCache)> {
        let n = inputs.len();
        if n < self.min_window() {
            return Err(Error::WindowTooShort { len: n, required: self.min_window() });
        }
        let k = self.kernel;
        let nf = self.filters;
        let mut x = vec![0.0; INPUTS * n];
        for (t, q) in inputs.iter().enumerate() {
            for c in 0..INPUTS {
                x[c * n + t] = q[c];
            }
        }
        let mut acts = vec![x];
        let mut pre = Vec::with_capacity(self.layers);
        let mut lens = vec![n];
        for layer in 0..self.layers {
            let cin = self.channels_in(layer);
            let len_in = lens[layer];
            let len_out = len_in - k + 1;
            let (wo, bo) = self.conv_offsets(layer);
            let input = &acts[layer];
            let mut z = vec![0.0; nf * len_out];
            for f in 0..nf {
                let zf = &mut z[f * len_out..(f + 1) * len_out];
                zf.iter_mut().for_each(|v| *v = self.values[bo + f]);
                for c in 0..cin {
                    let xc = &input[c * len_in..(c + 1) * len_in];
                    let w = &self.values[wo + (f * cin + c) * k..wo + (f * cin + c + 1) * k];
                    for (j, wj) in w.iter().enumerate() {
                        axpy(*wj, &xc[j..j + len_out], zf);
                    }
                }
            }
            let a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            if !a.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteActivation { step: layer });
            }
            pre.push(z);
            acts.push(a);
            lens.push(len_out);
        }
        let last = &acts[self.layers];
        let len_last = lens[self.layers];
        let readout: Vec<f64> = (0..nf).map(|f| last[(f + 1) * len_last - 1]).collect();
        let (w1, b1, w2, b2) = self.head_offsets();
        let head: Vec<f64> = (0..HEAD_WIDTH)
            .map(|r| self.values[b1 + r] + dot(&self.values[w1 + r * nf..w1 + (r + 1) * nf], &readout))
            .collect();
        let output: Vec3 = std::array::from_fn(|r| {
            self.values[b2 + r] + dot(&self.values[w2 + r * HEAD_WIDTH..w2 + (r + 1) * HEAD_WIDTH], &head)
        });
        if !output.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteActivation { step: self.layers });
        }
        let cache = CnnCache { generation: self.generation, acts, pre, lens, readout, head, output };
        Ok((output, cache))
    }

    pub fn backward(&self, cache: &CnnCache, d_out: &Vec3) -> Result<Gradients> {
        if cache.generation != self.generation || cache.pre.len() != self.layers {
            return Err(Error::StaleCache("CNN parameters changed after the forward pass".into()));
        }
        let k = self.kernel;
        let nf = self.filters;
        let mut grad = Gradients::zeros(self.values.len());
        let g = &mut grad.0;
        let (w1, b1, w2, b2) = self.head_offsets();

        let mut d_head = vec![0.0; HEAD_WIDTH];
        for r in 0..OUTPUTS {
            g[b2 + r] += d_out[r];
            axpy(d_out[r], &cache.head, &mut g[w2 + r * HEAD_WIDTH..w2 + (r + 1) * HEAD_WIDTH]);
            axpy(d_out[r], &self.values[w2 + r * HEAD_WIDTH..w2 + (r + 1) * HEAD_WIDTH], &mut d_head);
        }
        let mut d_readout = vec![0.0; nf];
        for r in 0..HEAD_WIDTH {
            g[b1 + r] += d_head[r];
            axpy(d_head[r], &cache.readout, &mut g[w1 + r * nf..w1 + (r + 1) * nf]);
            axpy(d_head[r], &self.values[w1 + r * nf..w1 + (r + 1) * nf], &mut d_readout);
        }

        let len_last = cache.lens[self.layers];
        let mut d_act = vec![0.0; nf * len_last];
        for f in 0..nf {
            d_act[(f + 1) * len_last - 1] = d_readout[f];
        }
        for layer in (0..self.layers).rev() {
            let cin = self.channels_in(layer);
            let len_in = cache.lens[layer];
            let len_out = cache.lens[layer + 1];
            let (wo, bo) = self.conv_offsets(layer);
            let z = &cache.pre[layer];
            let dz: Vec<f64> = d_act.iter().zip(z).map(|(d, z)| if *z > 0.0 { *d } else { 0.0 }).collect();
            let input = &cache.acts[layer];
            let mut d_in = if layer > 0 { vec![0.0; cin * len_in] } else { Vec::new() };
            for f in 0..nf {
                let dzf = &dz[f * len_out..(f + 1) * len_out];
                if dzf.iter().all(|v| *v == 0.0) {
                    continue;
                }
                g[bo + f] += dzf.iter().sum::<f64>();
                for c in 0..cin {
                    let xc = &input[c * len_in..(c + 1) * len_in];
                    let wbase = wo + (f * cin + c) * k;
                    for j in 0..k {
                        g[wbase + j] += dot(dzf, &xc[j..j + len_out]);
                        if layer > 0 {
                            let wj = self.values[wbase + j];
                            axpy(wj, dzf, &mut d_in[c * len_in + j..c * len_in + j + len_out]);
                        }
                    }
                }
            }
            d_act = d_in;
        }
        Ok(grad)
    }
}
