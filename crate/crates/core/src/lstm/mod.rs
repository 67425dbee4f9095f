//! Two-layer LSTM regressor trained with backpropagation through time.
//!
//! Inputs are windows of (normalized open, lagged daily sentiment) pairs;
//! the output is the normalized open of the following trading day.

mod cell;
mod checkpoint;
mod dataset;
mod model;
mod train;

pub use cell::{lstm_cell_forward, Gate, LstmLayer};
pub use checkpoint::Checkpoint;
pub use dataset::{
    build_dataset, build_from_rows, MinMax, Normalization, Row, SequenceDataset, Split, Window,
    DEFAULT_SPLIT,
};
pub use model::{DropoutMask, LstmModel, DEFAULT_DROPOUT, DEFAULT_HIDDEN, INPUT_SIZE};
pub use train::{
    evaluate_mse, predict_series, train, LossHistory, Optimizer, OptimizerState, Prediction,
    TrainConfig,
};
