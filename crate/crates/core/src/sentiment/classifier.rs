use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, SparseVector, DEFAULT_HASH_DIMS, DEFAULT_NGRAM_ORDERS};
use super::labels::SentimentLabel;
use crate::error::{Error, Result};

/// Logistic regression over hashed character n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hash_dims: usize,
    pub ngram_orders: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for ClassifierHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 100,
            l2: 1e-4,
        }
    }
}

// Saturated logits would otherwise round to exactly 0 or 1.
const PROBABILITY_FLOOR: f64 = 1e-15;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SentimentModel {
    pub fn zeros(hash_dims: usize, ngram_orders: &[usize]) -> Result<Self> {
        if !hash_dims.is_power_of_two() || hash_dims < 2 {
            return Err(Error::Invalid(format!("hash_dims {hash_dims} must be a power of two ≥ 2")));
        }
        Ok(Self {
            weights: vec![0.0; hash_dims],
            bias: 0.0,
            hash_dims,
            ngram_orders: ngram_orders.to_vec(),
        })
    }

    pub fn featurize(&self, text: &str) -> Result<SparseVector> {
        featurize(text, self.hash_dims, &self.ngram_orders)
    }

    fn probability_of(&self, x: &SparseVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }

    /// Probability that `text` is positive, kept strictly inside (0, 1).
    pub fn probability(&self, text: &str) -> Result<f64> {
        let p = self.probability_of(&self.featurize(text)?);
        Ok(p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
    }

    pub fn score(&self, post_id: &str, text: &str) -> Result<SentimentLabel> {
        Ok(SentimentLabel::from_probability(post_id, self.probability(text)?))
    }

    /// Mean cross-entropy plus `l2 / 2 · ‖w‖²` over pre-featurized data.
    pub fn objective(&self, data: &[(SparseVector, u8)], l2: f64) -> f64 {
        let ce: f64 = data
            .iter()
            .map(|(x, y)| {
                let z = x.dot(&self.weights) + self.bias;
                // log(1 + e^z) - y z, written to avoid overflow
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - f64::from(*y) * z
            })
            .sum::<f64>()
            / data.len() as f64;
        let reg: f64 = self.weights.iter().map(|w| w * w).sum();
        ce + 0.5 * l2 * reg
    }

    /// Gradient of [`Self::objective`] as (dense weight gradient, bias gradient).
    pub fn gradient(&self, data: &[(SparseVector, u8)], l2: f64) -> (Vec<f64>, f64) {
        let n = data.len() as f64;
        let mut gw: Vec<f64> = self.weights.iter().map(|w| l2 * w).collect();
        let mut gb = 0.0;
        for (x, y) in data {
            let err = (self.probability_of(x) - f64::from(*y)) / n;
            gb += err;
            for &(i, v) in &x.entries {
                gw[i] += err * v;
            }
        }
        (gw, gb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            hash_dims: self.hash_dims,
            ngram_orders: self.ngram_orders.clone(),
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i, *w))
                .collect(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        let mut model = Self::zeros(file.hash_dims, &file.ngram_orders)?;
        model.bias = file.bias;
        for (i, w) in file.weights {
            let slot = model
                .weights
                .get_mut(i)
                .ok_or_else(|| Error::Invalid(format!("weight index {i} out of range")))?;
            *slot = w;
        }
        if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("sentiment model"));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    hash_dims: usize,
    ngram_orders: Vec<usize>,
    bias: f64,
    weights: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: SentimentModel,
    /// Objective before the first step and after every epoch.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on the L2-regularized cross-entropy.
pub fn train_classifier(
    corpus: &[(String, u8)],
    hyper: &ClassifierHyper,
    hash_dims: usize,
    ngram_orders: &[usize],
) -> Result<TrainedClassifier> {
    if !corpus.iter().any(|(_, y)| *y == 1) || !corpus.iter().any(|(_, y)| *y == 0) {
        return Err(Error::SingleClass);
    }
    if let Some((_, y)) = corpus.iter().find(|(_, y)| *y > 1) {
        return Err(Error::Invalid(format!("corpus label {y} outside {{0,1}}")));
    }
    let mut model = SentimentModel::zeros(hash_dims, ngram_orders)?;
    let data: Vec<(SparseVector, u8)> = corpus
        .iter()
        .filter(|(t, _)| !t.trim().is_empty())
        .map(|(t, y)| Ok((model.featurize(t)?, *y)))
        .collect::<Result<_>>()?;

    let mut history = vec![model.objective(&data, hyper.l2)];
    for epoch in 0..hyper.epochs {
        let (gw, gb) = model.gradient(&data, hyper.l2);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= hyper.learning_rate * g;
        }
        model.bias -= hyper.learning_rate * gb;
        let loss = model.objective(&data, hyper.l2);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
    }
    Ok(TrainedClassifier {
        model,
        loss_history: history,
    })
}

/// Reads a `label,text` CSV (header row required, extra columns ignored).
pub fn load_corpus(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(0).unwrap_or("").trim();
        let label = match raw {
            "0" => 0,
            "1" => 1,
            _ => {
                return Err(Error::BadCell {
                    path: path.to_path_buf(),
                    row: i + 2,
                    field: "label".into(),
                    value: raw.into(),
                })
            }
        };
        out.push((rec.get(1).unwrap_or("").to_string(), label));
    }
    Ok(out)
}

impl Default for SentimentModel {
    fn default() -> Self {
        Self::zeros(DEFAULT_HASH_DIMS, &DEFAULT_NGRAM_ORDERS).expect("default dims are valid")
    }
}
