//! Rolling-origin evaluation: level-0 and level-1 backtests, RMSE
//! summaries and next-month forecasts.

pub mod config;
pub mod experiment;
pub mod level0;
pub mod level1;
pub mod log;
pub mod method;
pub mod summary;

pub use config::{BacktestConfig, Level1Window};
pub use experiment::{
    predict_next, run_full_experiment, run_full_experiment_with_logs, run_vaccine, Forecast,
    ForecastCell, VaccineData, VaccineRun,
};
pub use level0::run_level0_backtest;
pub use level1::run_level1_backtest;
pub use log::{LogEntry, PredictionLog};
pub use method::{Block, ClinicalMethod, Combiner, Method, WebMethod};
pub use summary::{mark_cells, summarize, BacktestReport, ReportCell};
