//! Rolling one-step-ahead predictions from the single-source models.

use rayon::prelude::*;

use super::config::BacktestConfig;
use super::log::{LogEntry, PredictionLog};
use super::method::{ClinicalMethod, Method, WebMethod};
use crate::clinical::{fit_ar_values, fit_arima_auto, fit_arima_values, fit_holt_winters_values};
use crate::error::{Error, Result};
use crate::ts::{MonthStamp, TimeSeries, UptakeSeries};
use crate::web::bagging::{fit_bagging, mean_prediction};
use crate::web::linear::{fit_lasso_cv_rows, fit_ols_rows};
use crate::web::panel::{design, QueryPanel};
use crate::web::{wm_init, WmState};

/// Everything the level-0 models produce for one target month.
pub(crate) struct StepOutput {
    pub naive: f64,
    pub clinical: [Result<f64>; 3],
    /// B, L and O, in that order.
    pub web: [Result<f64>; 3],
    /// Bagged member predictions, the inputs of weighted majority.
    pub members: Result<Vec<f64>>,
}

/// Fits every level-0 model on `history` (all uptake strictly before the
/// target month) and `panel_history` (the matching panel rows), then
/// predicts the target month from `row`, its panel frequencies.
pub(crate) fn step(
    history: &TimeSeries,
    panel_history: &QueryPanel,
    row: Option<&[f64]>,
    cfg: &BacktestConfig,
) -> StepOutput {
    let values = history.values();
    let naive = *values.last().expect("history is never empty");

    let hw = fit_holt_winters_values(values, cfg.season_length).map(|m| m.predict());
    let ar = fit_ar_values(values, cfg.ar_lags, true).and_then(|m| m.predict_next(values));
    let arima = if cfg.arima_auto {
        fit_arima_auto(history).and_then(|m| m.predict_next(values))
    } else {
        fit_arima_values(values, cfg.arima_order).and_then(|m| m.predict_next(values))
    };

    let (web, members) = match row {
        None => {
            let missing = Error::MissingHistory(history.end().succ());
            (
                [
                    Err(missing.clone()),
                    Err(missing.clone()),
                    Err(missing.clone()),
                ],
                Err(missing),
            )
        }
        Some(row) => {
            let members = fit_bagging(panel_history, history, &cfg.bagging())
                .and_then(|bag| bag.member_predictions(row));
            let b = members
                .as_ref()
                .map(|p| mean_prediction(p))
                .map_err(Clone::clone);
            let (l, o) = match design(panel_history, history) {
                Ok((rows, y)) => (
                    fit_lasso_cv_rows(&rows, &y, cfg.cv_folds).map(|m| m.predict_unchecked(row)),
                    fit_ols_rows(&rows, &y).map(|m| m.predict_unchecked(row)),
                ),
                Err(e) => (Err(e.clone()), Err(e)),
            };
            ([b, l, o], members)
        }
    };
    StepOutput {
        naive,
        clinical: [hw, ar, arima],
        web,
        members,
    }
}

/// Finite prediction or a naive substitute with the reason attached.
fn or_naive(result: &Result<f64>, naive: f64) -> (f64, Option<String>) {
    match result {
        Ok(v) if v.is_finite() => (*v, None),
        Ok(v) => (
            naive,
            Some(format!("non-finite prediction {v}; naive fallback")),
        ),
        Err(e) => (naive, Some(format!("{e}; naive fallback"))),
    }
}

/// Checks the protocol preconditions and returns the target months.
pub(crate) fn target_months(
    e: &TimeSeries,
    q: &QueryPanel,
    cfg: &BacktestConfig,
) -> Result<Vec<MonthStamp>> {
    cfg.validate()?;
    let end = cfg.end_month.unwrap_or(e.end());
    if end > e.end() {
        return Err(Error::InsufficientHistory(format!(
            "end month {end} is after the last observation {}",
            e.end()
        )));
    }
    let first = e.start().add_months(cfg.level0_warmup_months as i64);
    if first > end {
        return Err(Error::InsufficientHistory(format!(
            "{} months of uptake up to {end} cannot cover a {}-month warm-up plus one prediction",
            e.start().months_until(end) + 1,
            cfg.level0_warmup_months
        )));
    }
    if q.start() > e.start() || q.end() < end {
        return Err(Error::AlignmentError(format!(
            "query panel covers {}..{}, uptake needs {}..{end}",
            q.start(),
            q.end(),
            e.start()
        )));
    }
    Ok((0..=first.months_until(end))
        .map(|k| first.add_months(k))
        .collect())
}

pub(crate) struct Level0Run {
    pub log: PredictionLog,
    /// Weighted-majority state after the last logged month.
    pub wm: Option<WmState>,
}

pub(crate) fn level0_run(
    vaccine: &str,
    e: &UptakeSeries,
    q: &QueryPanel,
    cfg: &BacktestConfig,
) -> Result<Level0Run> {
    let e = e.series();
    let months = target_months(e, q, cfg)?;

    // Fits are independent across months; only weighted majority is
    // sequential, and it runs afterwards on the stored member predictions.
    let steps: Vec<StepOutput> = months
        .par_iter()
        .map(|&t| {
            let history = e.before(t)?;
            let panel_history = q.slice(e.start(), t.pred())?;
            Ok(step(&history, &panel_history, q.row(t), cfg))
        })
        .collect::<Result<_>>()?;

    let mut log = PredictionLog::new();
    let mut wm: Option<WmState> = None;
    for (&t, out) in months.iter().zip(&steps) {
        let actual = e.get(t).expect("target months lie inside the series");
        let mut push = |method: Method, (predicted, diagnostic): (f64, Option<String>)| {
            log.push(LogEntry {
                vaccine: vaccine.to_string(),
                method,
                month: t,
                predicted,
                actual,
                train_start: e.start(),
                train_end: t.pred(),
                diagnostic,
            })
        };
        push(Method::Naive, (out.naive, None))?;
        for (c, r) in ClinicalMethod::ALL.into_iter().zip(&out.clinical) {
            push(Method::Clinical(c), or_naive(r, out.naive))?;
        }

        let wm_cell = match &out.members {
            Ok(members) => {
                let state = match wm.take() {
                    Some(s) if s.len() == members.len() => s,
                    _ => wm_init(members.len(), cfg.wm_eta, cfg.wm_epsilon)?,
                };
                let combined = state.predict(members)?;
                wm = Some(state.update(members, combined, actual)?);
                or_naive(&Ok(combined), out.naive)
            }
            Err(err) => or_naive(&Err(err.clone()), out.naive),
        };
        push(Method::Web(WebMethod::Wm), wm_cell)?;
        for (w, r) in [WebMethod::B, WebMethod::L, WebMethod::O]
            .into_iter()
            .zip(&out.web)
        {
            push(Method::Web(w), or_naive(r, out.naive))?;
        }
    }
    Ok(Level0Run { log, wm })
}

/// Rolling level-0 backtest: for each month after the warm-up, every
/// single-source model is refitted on data strictly before that month and
/// predicts it. Failed fits are replaced by the naive prediction and
/// flagged in the entry's diagnostic.
pub fn run_level0_backtest(
    vaccine: &str,
    e: &UptakeSeries,
    q: &QueryPanel,
    cfg: &BacktestConfig,
) -> Result<PredictionLog> {
    level0_run(vaccine, e, q, cfg).map(|r| r.log)
}
