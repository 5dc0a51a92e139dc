use serde::{Deserialize, Serialize};

use crate::clinical::ArimaOrder;
use crate::error::{Error, Result};
use crate::stacking::SvrParams;
use crate::ts::MonthStamp;
use crate::web::{BaggingConfig, BaggingMode};

/// How the level-1 training set evolves after the warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level1Window {
    /// Every earlier level-0 month is used.
    #[default]
    Growing,
    /// Only the most recent `level1_warmup_months` level-0 months.
    Sliding,
}

/// Protocol constants for one experiment. Every field has a default, so a
/// TOML `[backtest]` table only needs the keys it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub level0_warmup_months: usize,
    pub level1_warmup_months: usize,
    pub season_length: usize,
    pub ar_lags: usize,
    pub arima_order: ArimaOrder,
    /// Pick the ARIMA order by AIC at every step instead of `arima_order`.
    pub arima_auto: bool,
    pub bagging_subset_size: usize,
    /// Number of bagged members; `None` gives one per query.
    pub bagging_count: Option<usize>,
    pub bagging_mode: BaggingMode,
    pub cv_folds: usize,
    pub wm_eta: f64,
    pub wm_epsilon: f64,
    pub svr_c: f64,
    pub svr_eps: f64,
    pub svr_gamma: f64,
    pub seed: u64,
    /// Last month to predict; defaults to the end of the uptake series.
    pub end_month: Option<MonthStamp>,
    pub level1_window: Level1Window,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            level0_warmup_months: 24,
            level1_warmup_months: 12,
            season_length: 12,
            ar_lags: 12,
            arima_order: ArimaOrder::default(),
            arima_auto: false,
            bagging_subset_size: 10,
            bagging_count: None,
            bagging_mode: BaggingMode::Queries,
            cv_folds: 3,
            wm_eta: 5.0,
            wm_epsilon: 2.0,
            svr_c: 1.0,
            svr_eps: 0.1,
            svr_gamma: 0.25,
            seed: 0,
            end_month: None,
            level1_window: Level1Window::Growing,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("level0_warmup_months", self.level0_warmup_months),
            ("level1_warmup_months", self.level1_warmup_months),
            ("season_length", self.season_length),
            ("ar_lags", self.ar_lags),
            ("bagging_subset_size", self.bagging_subset_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.bagging_count == Some(0) {
            return Err(Error::InvalidParameter(
                "bagging_count must be positive".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter(
                "cv_folds must be at least 2".into(),
            ));
        }
        if self.level0_warmup_months < 2 * self.season_length {
            return Err(Error::InvalidParameter(format!(
                "level0_warmup_months {} is shorter than two seasons of {}",
                self.level0_warmup_months, self.season_length
            )));
        }
        let reals = [
            ("wm_eta", self.wm_eta),
            ("wm_epsilon", self.wm_epsilon),
            ("svr_c", self.svr_c),
            ("svr_gamma", self.svr_gamma),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.svr_eps >= 0.0 && self.svr_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "svr_eps must be non-negative, got {}",
                self.svr_eps
            )));
        }
        Ok(())
    }

    pub fn bagging(&self) -> BaggingConfig {
        BaggingConfig {
            n_subsets: self.bagging_count,
            subset_size: self.bagging_subset_size,
            seed: self.seed,
            mode: self.bagging_mode,
            cv_folds: self.cv_folds,
        }
    }

    pub fn svr_linear(&self) -> SvrParams {
        SvrParams {
            c: self.svr_c,
            eps: self.svr_eps,
            ..SvrParams::linear()
        }
    }

    pub fn svr_gaussian(&self) -> SvrParams {
        SvrParams {
            c: self.svr_c,
            eps: self.svr_eps,
            ..SvrParams::gaussian(self.svr_gamma)
        }
    }
}
