use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gate blocks are stacked in this order in [`LstmLayer::weights`] and
/// [`LstmLayer::bias`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
}

/// One LSTM layer with a forget gate.
///
/// `weights` is a row-major `(4·hidden) × (input + hidden)` matrix: row
/// `gate·hidden + k` holds the input weights followed by the recurrent
/// weights of unit `k` for that gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Everything from one forward step that the backward pass needs.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmLayer {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            weights: vec![0.0; 4 * hidden_size * (input_size + hidden_size)],
            bias: vec![0.0; 4 * hidden_size],
        }
    }

    /// Uniform in ±1/√hidden, forget-gate bias shifted by +1.
    pub fn init<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden_size as f64).sqrt();
        let mut layer = Self::zeros(input_size, hidden_size);
        for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *w = rng.gen_range(-k..=k);
        }
        let forget = Gate::Forget as usize * hidden_size;
        for b in &mut layer.bias[forget..forget + hidden_size] {
            *b += 1.0;
        }
        layer
    }

    fn cols(&self) -> usize {
        self.input_size + self.hidden_size
    }

    pub(crate) fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> StepCache {
        let hs = self.hidden_size;
        let cols = self.cols();
        let mut z = self.bias.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &self.weights[r * cols..(r + 1) * cols];
            let (wx, wh) = row.split_at(self.input_size);
            *zr += wx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                + wh.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        }
        let block = |gate: Gate| &z[gate as usize * hs..(gate as usize + 1) * hs];
        let i: Vec<f64> = block(Gate::Input).iter().map(|v| sigmoid(*v)).collect();
        let f: Vec<f64> = block(Gate::Forget).iter().map(|v| sigmoid(*v)).collect();
        let g: Vec<f64> = block(Gate::Candidate).iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = block(Gate::Output).iter().map(|v| sigmoid(*v)).collect();
        let c_new: Vec<f64> = (0..hs).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let h_new: Vec<f64> = (0..hs).map(|k| o[k] * tanh_c[k]).collect();
        StepCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            c_prev: c.to_vec(),
            i,
            f,
            g,
            o,
            c: c_new,
            tanh_c,
            h: h_new,
        }
    }

    pub(crate) fn run(&self, xs: &[Vec<f64>]) -> Vec<StepCache> {
        let mut h = vec![0.0; self.hidden_size];
        let mut c = vec![0.0; self.hidden_size];
        let mut caches = Vec::with_capacity(xs.len());
        for x in xs {
            let cache = self.step(x, &h, &c);
            h.clone_from(&cache.h);
            c.clone_from(&cache.c);
            caches.push(cache);
        }
        caches
    }

    /// Hidden state after every step, starting from zero state.
    pub fn forward_sequence(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.run(xs).into_iter().map(|c| c.h).collect()
    }

    /// Backpropagation through time over one sequence.
    ///
    /// `dh_ext[t]` is the loss gradient arriving at `h_t` from above.
    /// Parameter gradients are accumulated into `grad`; the returned vectors
    /// are the gradients with respect to each input `x_t`.
    pub(crate) fn backward(
        &self,
        caches: &[StepCache],
        dh_ext: &[Vec<f64>],
        grad: &mut LstmLayer,
    ) -> Vec<Vec<f64>> {
        let hs = self.hidden_size;
        let inp = self.input_size;
        let cols = self.cols();
        let mut dh_next = vec![0.0; hs];
        let mut dc_next = vec![0.0; hs];
        let mut dz = vec![0.0; 4 * hs];
        let mut dxs = vec![Vec::new(); caches.len()];

        for t in (0..caches.len()).rev() {
            let s = &caches[t];
            for k in 0..hs {
                let dh = dh_ext[t][k] + dh_next[k];
                let d_o = dh * s.tanh_c[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let di = dc * s.g[k];
                let dg = dc * s.i[k];
                let df = dc * s.c_prev[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = di * s.i[k] * (1.0 - s.i[k]);
                dz[hs + k] = df * s.f[k] * (1.0 - s.f[k]);
                dz[2 * hs + k] = dg * (1.0 - s.g[k] * s.g[k]);
                dz[3 * hs + k] = d_o * s.o[k] * (1.0 - s.o[k]);
            }
            let mut d_in = vec![0.0; cols];
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad.bias[r] += d;
                let row = &self.weights[r * cols..(r + 1) * cols];
                let grow = &mut grad.weights[r * cols..(r + 1) * cols];
                for j in 0..inp {
                    grow[j] += d * s.x[j];
                    d_in[j] += d * row[j];
                }
                for j in 0..hs {
                    grow[inp + j] += d * s.h_prev[j];
                    d_in[inp + j] += d * row[inp + j];
                }
            }
            dh_next.copy_from_slice(&d_in[inp..]);
            d_in.truncate(inp);
            dxs[t] = d_in;
        }
        dxs
    }
}

/// A single cell update: returns `(h', c')`.
pub fn lstm_cell_forward(
    layer: &LstmLayer,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != layer.input_size {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: layer.input_size,
        });
    }
    if h.len() != layer.hidden_size || c.len() != layer.hidden_size {
        return Err(Error::LengthMismatch {
            left: h.len().max(c.len()),
            right: layer.hidden_size,
        });
    }
    if x.iter().chain(h).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lstm cell input"));
    }
    let s = layer.step(x, h, c);
    Ok((s.h, s.c))
}
