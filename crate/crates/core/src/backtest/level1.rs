//! Rolling stacking over the level-0 prediction streams.

use rayon::prelude::*;

use super::config::{BacktestConfig, Level1Window};
use super::log::{LogEntry, PredictionLog};
use super::method::{ClinicalMethod, Combiner, Method, WebMethod};
use crate::error::{Error, Result};
use crate::stacking::{fit_stack_ols, fit_svr, StackSample};
use crate::ts::{MonthStamp, UptakeSeries};

/// Level-0 predictions aligned on a common run of months.
pub(crate) struct Streams {
    pub months: Vec<MonthStamp>,
    pub clinical: [Vec<f64>; 3],
    pub web: [Vec<f64>; 4],
    pub actual: Vec<f64>,
}

impl Streams {
    pub fn from_log(vaccine: &str, log: &PredictionLog) -> Result<Self> {
        let pull = |method: Method| -> Result<(MonthStamp, Vec<f64>, Vec<f64>)> {
            let entries: Vec<&LogEntry> = log.stream(vaccine, method).collect();
            let first = entries.first().ok_or(Error::EmptyLog)?;
            Ok((
                first.month,
                entries.iter().map(|e| e.predicted).collect(),
                entries.iter().map(|e| e.actual).collect(),
            ))
        };
        let mut pulled = Vec::new();
        for c in ClinicalMethod::ALL {
            pulled.push(pull(Method::Clinical(c))?);
        }
        for w in WebMethod::ALL {
            pulled.push(pull(Method::Web(w))?);
        }
        let (start, len) = (pulled[0].0, pulled[0].1.len());
        if pulled.iter().any(|(s, v, _)| *s != start || v.len() != len) {
            return Err(Error::AlignmentError(format!(
                "level-0 streams for {vaccine} cover different months"
            )));
        }
        let actual = pulled[0].2.clone();
        let mut it = pulled.into_iter().map(|(_, v, _)| v);
        let mut next = || it.next().expect("seven streams");
        let clinical = [next(), next(), next()];
        let web = [next(), next(), next(), next()];
        Ok(Streams {
            months: (0..len).map(|k| start.add_months(k as i64)).collect(),
            clinical,
            web,
            actual,
        })
    }

    pub(crate) fn samples(
        &self,
        c: usize,
        w: usize,
        range: std::ops::Range<usize>,
    ) -> Vec<StackSample> {
        range
            .map(|k| StackSample {
                e_c: self.clinical[c][k],
                e_w: self.web[w][k],
                target: self.actual[k],
                month: self.months[k],
            })
            .collect()
    }
}

/// Fits one combiner on `samples` and predicts from `(e_c, e_w)`.
pub(crate) fn combine(
    combiner: Combiner,
    samples: &[StackSample],
    e_c: f64,
    e_w: f64,
    cfg: &BacktestConfig,
) -> Result<f64> {
    match combiner {
        Combiner::Ols => fit_stack_ols(samples).map(|m| m.predict(e_c, e_w)),
        Combiner::SvrLinear => fit_svr(samples, &cfg.svr_linear()).map(|m| m.predict(e_c, e_w)),
        Combiner::SvrGaussian => fit_svr(samples, &cfg.svr_gaussian()).map(|m| m.predict(e_c, e_w)),
    }
}

/// Stacked predictions for every month after the level-1 warm-up. Each of
/// the 12 clinical/web pairs is combined by OLS, linear SVR and Gaussian
/// SVR, refitted every month on the earlier level-0 predictions.
pub fn run_level1_backtest(
    vaccine: &str,
    level0_log: &PredictionLog,
    e: &UptakeSeries,
    cfg: &BacktestConfig,
) -> Result<PredictionLog> {
    cfg.validate()?;
    let streams = Streams::from_log(vaccine, level0_log)?;
    let warmup = cfg.level1_warmup_months;
    if streams.months.len() <= warmup {
        return Err(Error::InsufficientHistory(format!(
            "{} level-0 months cannot cover a {warmup}-month level-1 warm-up plus one prediction",
            streams.months.len()
        )));
    }
    let e = e.series();

    let per_month: Vec<Vec<LogEntry>> = (warmup..streams.months.len())
        .into_par_iter()
        .map(|k| {
            let t = streams.months[k];
            let lo = match cfg.level1_window {
                Level1Window::Growing => 0,
                Level1Window::Sliding => k - warmup,
            };
            let naive = e.get(t.pred()).ok_or(Error::MissingHistory(t.pred()))?;
            let actual = e.get(t).ok_or(Error::MissingHistory(t))?;
            let mut out = Vec::with_capacity(36);
            for method in Method::level1() {
                let Method::Stack {
                    combiner,
                    clinical,
                    web,
                } = method
                else {
                    unreachable!()
                };
                let (c, w) = (clinical as usize, web as usize);
                let samples = streams.samples(c, w, lo..k);
                let (predicted, diagnostic) = match combine(
                    combiner,
                    &samples,
                    streams.clinical[c][k],
                    streams.web[w][k],
                    cfg,
                ) {
                    Ok(v) if v.is_finite() => (v, None),
                    Ok(v) => (
                        naive,
                        Some(format!("non-finite prediction {v}; naive fallback")),
                    ),
                    Err(err) => (naive, Some(format!("{err}; naive fallback"))),
                };
                out.push(LogEntry {
                    vaccine: vaccine.to_string(),
                    method,
                    month: t,
                    predicted,
                    actual,
                    train_start: streams.months[lo],
                    train_end: streams.months[k - 1],
                    diagnostic,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    PredictionLog::from_entries(per_month.into_iter().flatten())
}
