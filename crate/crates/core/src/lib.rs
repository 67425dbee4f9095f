//! Sentiment-lagged next-day price forecasting.
//!
//! The crate covers the whole batch flow: loading post corpora and daily
//! stock bars, splitting authors into certified-financial and other
//! groups, labelling post sentiment, averaging it per day, finding the
//! lead-lag window, training a two-layer LSTM on (open, lagged sentiment)
//! and scoring the resulting trend calls.

pub mod error;
pub mod eval;
pub mod grouping;
pub mod ingest;
pub mod lagsearch;
pub mod lstm;
pub mod pipeline;
pub mod plot;
pub mod sentiment;

pub use error::{Error, Result};
