use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{LstmLayer, StepCache};
use crate::error::{Error, Result};

pub const INPUT_SIZE: usize = 2;
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_DROPOUT: f64 = 0.001;

/// Two stacked LSTM layers and a linear head on the last hidden state.
///
/// Dropout applies to the first layer's outputs during training only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub layers: Vec<LstmLayer>,
    pub head_weights: Vec<f64>,
    pub head_bias: f64,
    pub dropout: f64,
    pub lookback: usize,
}

/// Per-step keep/scale factors for the first layer's outputs.
pub type DropoutMask = Vec<Vec<f64>>;

pub(crate) struct Trace {
    lower: Vec<StepCache>,
    upper: Vec<StepCache>,
    pub output: f64,
}

impl LstmModel {
    pub fn zeros(input_size: usize, hidden_size: usize, lookback: usize) -> Self {
        Self {
            layers: vec![
                LstmLayer::zeros(input_size, hidden_size),
                LstmLayer::zeros(hidden_size, hidden_size),
            ],
            head_weights: vec![0.0; hidden_size],
            head_bias: 0.0,
            dropout: 0.0,
            lookback,
        }
    }

    pub fn init<R: Rng>(
        input_size: usize,
        hidden_size: usize,
        lookback: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let lower = LstmLayer::init(input_size, hidden_size, rng);
        let upper = LstmLayer::init(hidden_size, hidden_size, rng);
        let k = 1.0 / (hidden_size as f64).sqrt();
        let head_weights = (0..hidden_size).map(|_| rng.gen_range(-k..=k)).collect();
        Self {
            layers: vec![lower, upper],
            head_weights,
            head_bias: 0.0,
            dropout,
            lookback,
        }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.layers[0].hidden_size
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Parameter tensors in a fixed order, see [`Self::param_names`].
    pub fn params(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(6);
        for l in &self.layers {
            v.push(&l.weights);
            v.push(&l.bias);
        }
        v.push(&self.head_weights);
        v.push(std::slice::from_ref(&self.head_bias));
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(6);
        for l in &mut self.layers {
            v.push(&mut l.weights);
            v.push(&mut l.bias);
        }
        v.push(&mut self.head_weights);
        v.push(std::slice::from_mut(&mut self.head_bias));
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v = Vec::new();
        for i in 0..self.layers.len() {
            v.push(format!("layer{i}.weights"));
            v.push(format!("layer{i}.bias"));
        }
        v.push("head.weights".into());
        v.push("head.bias".into());
        v
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.input_size(), self.hidden_size(), self.lookback);
        z.dropout = self.dropout;
        z
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.params_mut().into_iter().zip(other.params()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    fn check_window(&self, window: &[Vec<f64>]) -> Result<()> {
        if window.len() != self.lookback {
            return Err(Error::LengthMismatch {
                left: window.len(),
                right: self.lookback,
            });
        }
        if let Some(x) = window.iter().find(|x| x.len() != self.input_size()) {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.input_size(),
            });
        }
        Ok(())
    }

    pub(crate) fn trace(&self, window: &[Vec<f64>], mask: Option<&DropoutMask>) -> Trace {
        let lower = self.layers[0].run(window);
        let upper_in: Vec<Vec<f64>> = match mask {
            Some(mask) => lower
                .iter()
                .zip(mask)
                .map(|(s, m)| s.h.iter().zip(m).map(|(h, k)| h * k).collect())
                .collect(),
            None => lower.iter().map(|s| s.h.clone()).collect(),
        };
        let upper = self.layers[1].run(&upper_in);
        let last = &upper.last().expect("window is non-empty").h;
        let output = self.head_bias
            + self
                .head_weights
                .iter()
                .zip(last)
                .map(|(w, h)| w * h)
                .sum::<f64>();
        Trace {
            lower,
            upper,
            output,
        }
    }

    /// Prediction in evaluation mode (no dropout).
    pub fn forward(&self, window: &[Vec<f64>]) -> Result<f64> {
        self.check_window(window)?;
        Ok(self.trace(window, None).output)
    }

    /// Accumulates into `grad` the gradient of `scale · output` given a
    /// finished trace.
    pub(crate) fn backward(
        &self,
        trace: &Trace,
        mask: Option<&DropoutMask>,
        scale: f64,
        grad: &mut LstmModel,
    ) {
        let steps = trace.upper.len();
        let last = &trace.upper[steps - 1].h;
        for (g, h) in grad.head_weights.iter_mut().zip(last) {
            *g += scale * h;
        }
        grad.head_bias += scale;

        let hs = self.hidden_size();
        let mut dh_upper = vec![vec![0.0; hs]; steps];
        dh_upper[steps - 1] = self.head_weights.iter().map(|w| scale * w).collect();
        let (g_lower, g_upper) = grad.layers.split_at_mut(1);
        let mut dx_upper = self.layers[1].backward(&trace.upper, &dh_upper, &mut g_upper[0]);
        if let Some(mask) = mask {
            for (dx, m) in dx_upper.iter_mut().zip(mask) {
                for (d, k) in dx.iter_mut().zip(m) {
                    *d *= k;
                }
            }
        }
        self.layers[0].backward(&trace.lower, &dx_upper, &mut g_lower[0]);
    }

    /// Mean squared error over a batch and its gradient. `masks`, when
    /// given, must hold one dropout mask per window.
    pub fn loss_and_gradient(
        &self,
        windows: &[&[Vec<f64>]],
        targets: &[f64],
        masks: Option<&[DropoutMask]>,
    ) -> Result<(f64, LstmModel)> {
        let mut grad = self.zeros_like();
        let loss = self.accumulate(windows, targets, masks, windows.len(), &mut grad)?;
        Ok((loss / windows.len() as f64, grad))
    }

    /// Adds the gradient of `Σ (y − t)² / batch_len` into `grad` and returns
    /// the unscaled squared-error sum.
    pub(crate) fn accumulate(
        &self,
        windows: &[&[Vec<f64>]],
        targets: &[f64],
        masks: Option<&[DropoutMask]>,
        batch_len: usize,
        grad: &mut LstmModel,
    ) -> Result<f64> {
        if windows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: windows.len(),
                right: targets.len(),
            });
        }
        let mut sse = 0.0;
        for (idx, (w, t)) in windows.iter().zip(targets).enumerate() {
            self.check_window(w)?;
            let mask = masks.map(|m| &m[idx]);
            let trace = self.trace(w, mask);
            let err = trace.output - t;
            sse += err * err;
            self.backward(&trace, mask, 2.0 * err / batch_len as f64, grad);
        }
        Ok(sse)
    }

    /// Mean squared error over a batch, evaluation mode.
    pub fn loss(&self, windows: &[&[Vec<f64>]], targets: &[f64]) -> Result<f64> {
        let mut sse = 0.0;
        for (w, t) in windows.iter().zip(targets) {
            let e = self.forward(w)? - t;
            sse += e * e;
        }
        Ok(sse / windows.len() as f64)
    }
}
