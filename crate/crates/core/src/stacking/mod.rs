//! Level-1 combiners of one clinical and one web prediction stream.

pub mod ols;
pub mod svr;

use serde::{Deserialize, Serialize};

use crate::ts::MonthStamp;

pub use ols::{fit_stack_ols, predict_stack_ols, OlsStackModel};
pub use svr::{fit_svr, predict_svr, Kernel, SvrParams, SvrStackModel};

/// One month of level-0 output with the realised uptake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackSample {
    pub e_c: f64,
    pub e_w: f64,
    pub target: f64,
    pub month: MonthStamp,
}
