//! LSTM predictor: one recurrent layer followed by a linear head
//! (hidden -> 32 -> 3).
//!
//! Gate weights are stored stacked in the order input, forget, output,
//! modulation, so `W_qi, W_qf, W_qo, W_qc` together form one `4H x 3` matrix
//! and `W_hi .. W_hc` one `4H x H` matrix.

use rand::Rng;

use super::math::{axpy, dot, sigmoid};
use super::params::{Gradients, ParamLayout};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const INPUTS: usize = 3;
const OUTPUTS: usize = 3;
pub const HEAD_WIDTH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    hidden: usize,
    values: Vec<f64>,
    generation: u64,
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    wq: usize,
    wh: usize,
    b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    total: usize,
}

impl Offsets {
    fn new(h: usize) -> Self {
        let wq = 0;
        let wh = wq + 4 * h * INPUTS;
        let b = wh + 4 * h * h;
        let w1 = b + 4 * h;
        let b1 = w1 + HEAD_WIDTH * h;
        let w2 = b1 + HEAD_WIDTH;
        let b2 = w2 + OUTPUTS * HEAD_WIDTH;
        Self { wq, wh, b, w1, b1, w2, b2, total: b2 + OUTPUTS }
    }
}

/// Output of a single cell update, with the gate activations.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellOutput {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
}

/// Activations kept by [`LstmParams::forward`] for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmCache {
    generation: u64,
    hidden: usize,
    steps: usize,
    xs: Vec<Vec3>,
    /// `(steps + 1) * H`, row 0 is the zero initial state.
    hs: Vec<f64>,
    cs: Vec<f64>,
    /// `steps * 4H` post-activation gates.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    head: Vec<f64>,
    pub output: Vec3,
}

impl LstmParams {
    pub fn zeros(hidden: usize) -> Self {
        Self { hidden, values: vec![0.0; Offsets::new(hidden).total], generation: 0 }
    }

    /// Uniform weights in `±1/sqrt(fan_in)`, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng>(hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(hidden);
        let o = Offsets::new(hidden);
        let gate_bound = 1.0 / ((INPUTS + hidden) as f64).sqrt();
        for v in &mut p.values[o.wq..o.b] {
            *v = rng.gen_range(-gate_bound..gate_bound);
        }
        for v in &mut p.values[o.b + hidden..o.b + 2 * hidden] {
            *v = 1.0;
        }
        let b1 = 1.0 / (hidden as f64).sqrt();
        for v in &mut p.values[o.w1..o.b1] {
            *v = rng.gen_range(-b1..b1);
        }
        let b2 = 1.0 / (HEAD_WIDTH as f64).sqrt();
        for v in &mut p.values[o.w2..o.b2] {
            *v = rng.gen_range(-b2..b2);
        }
        p
    }

    pub fn from_values(hidden: usize, values: Vec<f64>) -> Result<Self> {
        let expected = Offsets::new(hidden).total;
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "LSTM with hidden {hidden} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { hidden, values, generation: 0 })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn layout(&self) -> ParamLayout {
        let h = self.hidden;
        let mut l = ParamLayout::default();
        for g in ["i", "f", "o", "c"] {
            l.push(&format!("W_q{g}"), &[h, INPUTS]);
        }
        for g in ["i", "f", "o", "c"] {
            l.push(&format!("W_h{g}"), &[h, h]);
        }
        for g in ["i", "f", "o", "c"] {
            l.push(&format!("b_{g}"), &[h]);
        }
        l.push("W_fc1", &[HEAD_WIDTH, h]);
        l.push("b_fc1", &[HEAD_WIDTH]);
        l.push("W_fc2", &[OUTPUTS, HEAD_WIDTH]);
        l.push("b_fc2", &[OUTPUTS]);
        debug_assert_eq!(l.total(), self.values.len());
        l
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access; invalidates caches taken before the call.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.values
    }

    /// One cell update on pre-normalized input.
    fn cell_into(
        &self,
        x: &Vec3,
        h_prev: &[f64],
        c_prev: &[f64],
        gates: &mut [f64],
        c: &mut [f64],
        tanh_c: &mut [f64],
        h: &mut [f64],
    ) {
        let hd = self.hidden;
        let o = Offsets::new(hd);
        let wq = &self.values[o.wq..o.wh];
        let wh = &self.values[o.wh..o.b];
        let b = &self.values[o.b..o.w1];
        for r in 0..4 * hd {
            let q = &wq[r * INPUTS..r * INPUTS + INPUTS];
            let z = b[r] + q[0] * x[0] + q[1] * x[1] + q[2] * x[2] + dot(&wh[r * hd..(r + 1) * hd], h_prev);
            gates[r] = if r < 3 * hd { sigmoid(z) } else { z.tanh() };
        }
        for k in 0..hd {
            let (ig, fg, og, gg) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
            c[k] = fg * c_prev[k] + ig * gg;
            tanh_c[k] = c[k].tanh();
            h[k] = og * tanh_c[k];
        }
    }

    fn head_forward(&self, h: &[f64]) -> (Vec<f64>, Vec3) {
        let hd = self.hidden;
        let o = Offsets::new(hd);
        let w1 = &self.values[o.w1..o.b1];
        let b1 = &self.values[o.b1..o.w2];
        let w2 = &self.values[o.w2..o.b2];
        let b2 = &self.values[o.b2..o.total];
        let z1: Vec<f64> = (0..HEAD_WIDTH).map(|r| b1[r] + dot(&w1[r * hd..(r + 1) * hd], h)).collect();
        let out = std::array::from_fn(|r| b2[r] + dot(&w2[r * HEAD_WIDTH..(r + 1) * HEAD_WIDTH], &z1));
        (z1, out)
    }

    /// Unrolls the cell over `inputs` (normalized, oldest first) from a zero
    /// state and applies the head to the final hidden state.
    pub fn forward(&self, inputs: &[Vec3]) -> Result<(Vec3, LstmCache)> {
        let hd = self.hidden;
        let steps = inputs.len();
        if steps == 0 {
            return Err(Error::Shape("empty input sequence".into()));
        }
        let mut hs = vec![0.0; (steps + 1) * hd];
        let mut cs = vec![0.0; (steps + 1) * hd];
        let mut gates = vec![0.0; steps * 4 * hd];
        let mut tanh_c = vec![0.0; steps * hd];
        for (t, x) in inputs.iter().enumerate() {
            let (h_done, h_rest) = hs.split_at_mut((t + 1) * hd);
            let (c_done, c_rest) = cs.split_at_mut((t + 1) * hd);
            self.cell_into(
                x,
                &h_done[t * hd..],
                &c_done[t * hd..],
                &mut gates[t * 4 * hd..(t + 1) * 4 * hd],
                &mut c_rest[..hd],
                &mut tanh_c[t * hd..(t + 1) * hd],
                &mut h_rest[..hd],
            );
            if !c_rest[..hd].iter().all(|v| v.is_finite()) || !h_rest[..hd].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteActivation { step: t });
            }
        }
        let (head, output) = self.head_forward(&hs[steps * hd..]);
        if !output.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteActivation { step: steps });
        }
        let cache = LstmCache {
            generation: self.generation,
            hidden: hd,
            steps,
            xs: inputs.to_vec(),
            hs,
            cs,
            gates,
            tanh_c,
            head,
            output,
        };
        Ok((output, cache))
    }

    /// Backpropagation through time from `d_out` (gradient of the loss with
    /// respect to the network output).
    pub fn backward(&self, cache: &LstmCache, d_out: &Vec3) -> Result<Gradients> {
        if cache.generation != self.generation || cache.hidden != self.hidden {
            return Err(Error::StaleCache("LSTM parameters changed after the forward pass".into()));
        }
        let hd = self.hidden;
        let o = Offsets::new(hd);
        let mut grad = Gradients::zeros(o.total);
        let g = &mut grad.0;
        let steps = cache.steps;

        // Head.
        let w1 = &self.values[o.w1..o.b1];
        let w2 = &self.values[o.w2..o.b2];
        let mut d_head = vec![0.0; HEAD_WIDTH];
        for r in 0..OUTPUTS {
            g[o.b2 + r] += d_out[r];
            axpy(d_out[r], &cache.head, &mut g[o.w2 + r * HEAD_WIDTH..o.w2 + (r + 1) * HEAD_WIDTH]);
            axpy(d_out[r], &w2[r * HEAD_WIDTH..(r + 1) * HEAD_WIDTH], &mut d_head);
        }
        let h_last = &cache.hs[steps * hd..];
        let mut dh = vec![0.0; hd];
        for r in 0..HEAD_WIDTH {
            g[o.b1 + r] += d_head[r];
            axpy(d_head[r], h_last, &mut g[o.w1 + r * hd..o.w1 + (r + 1) * hd]);
            axpy(d_head[r], &w1[r * hd..(r + 1) * hd], &mut dh);
        }

        // Recurrence.
        let wh = &self.values[o.wh..o.b];
        let mut dc = vec![0.0; hd];
        let mut da = vec![0.0; 4 * hd];
        let mut dh_prev = vec![0.0; hd];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let tc = &cache.tanh_c[t * hd..(t + 1) * hd];
            let c_prev = &cache.cs[t * hd..(t + 1) * hd];
            let h_prev = &cache.hs[t * hd..(t + 1) * hd];
            for k in 0..hd {
                let (ig, fg, og, gg) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
                let d_o = dh[k] * tc[k];
                dc[k] += dh[k] * og * (1.0 - tc[k] * tc[k]);
                let d_i = dc[k] * gg;
                let d_g = dc[k] * ig;
                let d_f = dc[k] * c_prev[k];
                da[k] = d_i * ig * (1.0 - ig);
                da[hd + k] = d_f * fg * (1.0 - fg);
                da[2 * hd + k] = d_o * og * (1.0 - og);
                da[3 * hd + k] = d_g * (1.0 - gg * gg);
                dc[k] *= fg;
            }
            let x = &cache.xs[t];
            dh_prev.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * hd {
                let a = da[r];
                if a == 0.0 {
                    continue;
                }
                g[o.b + r] += a;
                let wq = &mut g[o.wq + r * INPUTS..o.wq + (r + 1) * INPUTS];
                wq[0] += a * x[0];
                wq[1] += a * x[1];
                wq[2] += a * x[2];
                axpy(a, h_prev, &mut g[o.wh + r * hd..o.wh + (r + 1) * hd]);
                axpy(a, &wh[r * hd..(r + 1) * hd], &mut dh_prev);
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        Ok(grad)
    }
}

/// Single LSTM cell update: gates `i, f, o`, modulation `g`, new cell and
/// hidden state.
pub fn lstm_cell(p: &LstmParams, q_t: &Vec3, h_prev: &[f64], c_prev: &[f64]) -> Result<LstmCellOutput> {
    let hd = p.hidden;
    if h_prev.len() != hd || c_prev.len() != hd {
        return Err(Error::Shape(format!(
            "cell state lengths {}/{} do not match hidden size {hd}",
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut gates = vec![0.0; 4 * hd];
    let mut c = vec![0.0; hd];
    let mut tc = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    p.cell_into(q_t, h_prev, c_prev, &mut gates, &mut c, &mut tc, &mut h);
    Ok(LstmCellOutput {
        h,
        c,
        i: gates[..hd].to_vec(),
        f: gates[hd..2 * hd].to_vec(),
        o: gates[2 * hd..3 * hd].to_vec(),
        g: gates[3 * hd..].to_vec(),
    })
}
