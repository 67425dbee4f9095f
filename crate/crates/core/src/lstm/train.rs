use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{SequenceDataset, Split, Window};
use super::model::{DropoutMask, LstmModel, DEFAULT_DROPOUT, DEFAULT_HIDDEN, INPUT_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub lookback: usize,
    pub optimizer: Optimizer,
    pub hidden_size: usize,
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 100,
            learning_rate: 1e-3,
            seed: 7,
            lookback: 20,
            optimizer: Optimizer::Adam,
            hidden_size: DEFAULT_HIDDEN,
            dropout: DEFAULT_DROPOUT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.lookback == 0 || self.hidden_size == 0 {
            return Err(Error::Invalid("batch_size, lookback and hidden_size must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Invalid(format!("learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    /// Fresh model with the seeded initialization this config implies.
    pub fn init_model(&self) -> LstmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        LstmModel::init(INPUT_SIZE, self.hidden_size, self.lookback, self.dropout, &mut rng)
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First-order optimizer state over the model's flattened parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: Optimizer,
    learning_rate: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, learning_rate: f64, model: &LstmModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            kind,
            learning_rate,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn apply(&mut self, model: &mut LstmModel, grad: &LstmModel) {
        self.step += 1;
        let lr = self.learning_rate;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step);
        for (((p, g), m), v) in model
            .params_mut()
            .into_iter()
            .zip(grad.params())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            match self.kind {
                Optimizer::Sgd => {
                    for (w, d) in p.iter_mut().zip(g) {
                        *w -= lr * d;
                    }
                }
                Optimizer::Adam => {
                    for i in 0..p.len() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    /// Mean training-mode batch loss per epoch.
    pub train: Vec<f64>,
    /// Evaluation-mode loss on the test split per epoch (reporting only).
    pub validation: Vec<f64>,
}

// Fixed chunking keeps the gradient summation order independent of the
// number of worker threads.
const GRAD_CHUNK: usize = 8;

fn batch_gradient(
    model: &LstmModel,
    batch: &[&Window],
    masks: Option<&[DropoutMask]>,
) -> Result<(f64, LstmModel)> {
    let partials: Vec<Result<(f64, LstmModel)>> = batch
        .par_chunks(GRAD_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let windows: Vec<&[Vec<f64>]> = chunk.iter().map(|w| w.inputs.as_slice()).collect();
            let targets: Vec<f64> = chunk.iter().map(|w| w.target).collect();
            let chunk_masks = masks.map(|m| &m[c * GRAD_CHUNK..c * GRAD_CHUNK + chunk.len()]);
            let mut grad = model.zeros_like();
            let sse = model.accumulate(&windows, &targets, chunk_masks, batch.len(), &mut grad)?;
            Ok((sse, grad))
        })
        .collect();
    let mut total = model.zeros_like();
    let mut sse = 0.0;
    for p in partials {
        let (s, g) = p?;
        sse += s;
        total.add_assign(&g);
    }
    Ok((sse / batch.len() as f64, total))
}

fn sample_mask<R: Rng>(rng: &mut R, steps: usize, hidden: usize, rate: f64) -> DropoutMask {
    let keep = 1.0 / (1.0 - rate);
    (0..steps)
        .map(|_| {
            (0..hidden)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        })
        .collect()
}

/// Evaluation-mode MSE (normalized units) over one split.
pub fn evaluate_mse(model: &LstmModel, dataset: &SequenceDataset, which: Split) -> Result<f64> {
    let windows = dataset.split(which);
    if windows.is_empty() {
        return Err(Error::Empty("split"));
    }
    let errs: Vec<Result<f64>> = windows
        .par_iter()
        .map(|w| model.forward(&w.inputs).map(|y| (y - w.target).powi(2)))
        .collect();
    let mut sse = 0.0;
    for e in errs {
        sse += e?;
    }
    Ok(sse / windows.len() as f64)
}

/// Mini-batch training with seeded shuffling. Bit-reproducible for a given
/// (model, dataset, config).
pub fn train(
    mut model: LstmModel,
    dataset: &SequenceDataset,
    config: &TrainConfig,
) -> Result<(LstmModel, LossHistory)> {
    config.validate()?;
    let train_windows = dataset.split(Split::Train);
    if train_windows.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if model.lookback != dataset.lookback {
        return Err(Error::LengthMismatch {
            left: model.lookback,
            right: dataset.lookback,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_1ab5);
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, &model);
    let mut history = LossHistory::default();
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let has_test = !dataset.split(Split::Test).is_empty();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sse = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&Window> = idx.iter().map(|&i| &train_windows[i]).collect();
            let masks: Option<Vec<DropoutMask>> = (model.dropout > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| sample_mask(&mut rng, model.lookback, model.hidden_size(), model.dropout))
                    .collect()
            });
            let (loss, grad) = batch_gradient(&model, &batch, masks.as_deref())?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_sse += loss * batch.len() as f64;
            opt.apply(&mut model, &grad);
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        history.train.push(epoch_sse / train_windows.len() as f64);
        if has_test {
            history.validation.push(evaluate_mse(&model, dataset, Split::Test)?);
        }
    }
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub date: NaiveDate,
    pub predicted: f64,
    pub actual: f64,
    pub predicted_norm: f64,
    pub actual_norm: f64,
}

/// Denormalized next-day open predictions for one split, in date order.
pub fn predict_series(
    model: &LstmModel,
    dataset: &SequenceDataset,
    which: Split,
) -> Result<Vec<Prediction>> {
    let open = dataset.normalization.open;
    dataset
        .split(which)
        .par_iter()
        .map(|w| {
            let y = model.forward(&w.inputs)?;
            Ok(Prediction {
                date: w.target_date,
                predicted: open.denormalize(y),
                actual: w.target_open,
                predicted_norm: y,
                actual_norm: w.target,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::dataset::{build_from_rows, Row};
    use chrono::Duration;

    fn dataset(n: usize, f: impl Fn(usize) -> f64, lookback: usize) -> SequenceDataset {
        let d0 = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        let rows = (0..n)
            .map(|i| Row {
                date: d0 + Duration::days(i as i64),
                open: f(i),
                sentiment: 0.5,
            })
            .collect();
        build_from_rows(rows, 0, lookback, 0.6).unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            hidden_size: 6,
            lookback: 4,
            epochs: 5,
            learning_rate: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let ds = dataset(80, |i| 10.0 + (i as f64 * 0.3).sin(), 4);
        let cfg = small_config();
        let (a, ha) = train(cfg.init_model(), &ds, &cfg).unwrap();
        let (b, hb) = train(cfg.init_model(), &ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert_eq!(ha.train.len(), 5);
        assert_eq!(ha.validation.len(), 5);
    }

    #[test]
    fn constant_target_is_learned() {
        let ds = dataset(120, |_| 42.0, 4);
        let cfg = TrainConfig {
            epochs: 200,
            ..small_config()
        };
        let (m, _) = train(cfg.init_model(), &ds, &cfg).unwrap();
        assert!(evaluate_mse(&m, &ds, Split::Train).unwrap() < 1e-4);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = dataset(60, |i| (i as f64).sin(), 4);
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 1e300,
            ..small_config()
        };
        assert!(matches!(train(cfg.init_model(), &ds, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn prediction_arity_and_finiteness() {
        let ds = dataset(60, |i| 5.0 + (i as f64).cos(), 4);
        let cfg = small_config();
        let m = cfg.init_model();
        let test = predict_series(&m, &ds, Split::Test).unwrap();
        let train_p = predict_series(&m, &ds, Split::Train).unwrap();
        assert_eq!(test.len(), ds.split(Split::Test).len());
        assert_eq!(train_p.len(), ds.split(Split::Train).len());
        assert!(test.iter().all(|p| p.predicted.is_finite()));
    }

    #[test]
    fn step_size_scales_linearly_with_learning_rate() {
        let ds = dataset(40, |i| (i as f64 * 0.2).sin(), 4);
        let cfg = small_config();
        let base = cfg.init_model();
        let batch: Vec<&Window> = ds.split(Split::Train).iter().collect();
        let (_, grad) = batch_gradient(&base, &batch, None).unwrap();
        let delta = |lr: f64| {
            let mut m = base.clone();
            OptimizerState::new(Optimizer::Adam, lr, &m).apply(&mut m, &grad);
            m.params()
                .iter()
                .zip(base.params())
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect::<Vec<_>>())
                .sum::<f64>()
                .sqrt()
        };
        let ratios: Vec<f64> = [1e-3, 1e-5, 1e-7].iter().map(|lr| delta(*lr) / lr).collect();
        assert!(ratios[0] > 0.0);
        for r in &ratios[1..] {
            assert!((r / ratios[0] - 1.0).abs() < 1e-6, "{ratios:?}");
        }
        assert!(delta(1e-12) < 1e-9);
    }
}
