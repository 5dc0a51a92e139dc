//! Monthly vaccination-uptake forecasting from clinical history and
//! web-search query frequencies, with two-level stacking and a
//! rolling-origin backtest.

pub mod backtest;
pub mod clinical;
pub mod error;
pub mod experiment_file;
pub mod ingest;
pub mod linalg;
pub mod optim;
pub mod report;
pub mod stacking;
pub mod synthetic;
pub mod ts;
pub mod web;

pub use error::{Error, Result};
pub use ts::{MonthStamp, TimeSeries, UptakeSeries};
