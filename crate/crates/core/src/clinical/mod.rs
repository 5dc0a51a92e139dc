//! Level-0 forecasters over the clinical uptake series.

pub mod ar;
pub mod arima;
pub mod holt_winters;

pub use ar::{fit_ar, fit_ar_values, ArModel};
pub use arima::{fit_arima, fit_arima_auto, fit_arima_values, ArimaModel, ArimaOrder};
pub use holt_winters::{
    fit_holt_winters, fit_holt_winters_values, run_holt_winters, HwModel, HwParams,
};
