//! News-aware crude-oil price forecasting.
//!
//! The crate is organised by model component:
//!
//! * [`timeseries`]: series type, differencing, ADF / correlogram / portmanteau diagnostics
//! * [`arima`]: conditional-likelihood ARMA fitting on a differenced series, rolling mean forecasts
//! * [`garch`]: ARCH-effect test, GARCH(m,s) maximum likelihood, variance forecasts
//! * [`sentiment`]: lexicon/rule based four-score sentiment and per-day aggregation
//! * [`events`]: latent event-type model trained by variational inference, slot assignment,
//!   dependency-based event assembly and schema-matching evaluation
//! * [`neural`]: LSTM and MLP with hand-written gradients, ADAM
//! * [`pipeline`]: feature rows, splits, the fusion head, metrics, the DM test and the benchmark runner
//! * [`ingest`]: price CSV / news JSONL readers and outlier cleaning
//! * [`synth`]: deterministic synthetic market + news corpus used for end-to-end checks

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod arima;
pub mod document;
pub mod error;
pub mod events;
pub mod garch;
pub mod ingest;
pub mod linalg;
pub mod neural;
pub mod optim;
pub mod pipeline;
pub mod sentiment;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
