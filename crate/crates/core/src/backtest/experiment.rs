use rayon::prelude::*;

use super::config::{BacktestConfig, Level1Window};
use super::level0::{level0_run, step};
use super::level1::{combine, run_level1_backtest, Streams};
use super::log::PredictionLog;
use super::method::{ClinicalMethod, Method, WebMethod};
use super::summary::{summarize, BacktestReport};
use crate::error::{Error, Result};
use crate::ts::{MonthStamp, UptakeSeries};
use crate::web::panel::QueryPanel;
use crate::web::wm_init;

/// Inputs for one vaccine.
#[derive(Debug, Clone)]
pub struct VaccineData {
    pub id: String,
    pub uptake: UptakeSeries,
    pub panel: QueryPanel,
}

/// Outputs for one vaccine.
#[derive(Debug, Clone)]
pub struct VaccineRun {
    /// All 44 columns over the level-1 evaluation window.
    pub report: BacktestReport,
    /// The single-source columns over the longer level-0 window.
    pub level0_report: Option<BacktestReport>,
    pub log: PredictionLog,
}

/// Level-0 and level-1 backtests plus summaries for one vaccine.
pub fn run_vaccine(data: &VaccineData, cfg: &BacktestConfig) -> Result<VaccineRun> {
    let level0 = level0_run(&data.id, &data.uptake, &data.panel, cfg)?.log;
    let level0_report = summarize(&level0, &data.uptake)?;
    let level1 = run_level1_backtest(&data.id, &level0, &data.uptake, cfg)?;
    let mut log = level0;
    log.extend(level1)?;
    let report = summarize(&log, &data.uptake)?;
    Ok(VaccineRun {
        report,
        level0_report: Some(level0_report),
        log,
    })
}

/// Runs every vaccine independently (in parallel). A vaccine that fails
/// yields a report carrying only the error, and the others still run.
pub fn run_full_experiment_with_logs(
    datasets: &[VaccineData],
    cfg: &BacktestConfig,
) -> Result<Vec<VaccineRun>> {
    if datasets.is_empty() {
        return Err(Error::InvalidParameter("no vaccine datasets given".into()));
    }
    cfg.validate()?;
    Ok(datasets
        .par_iter()
        .map(|d| {
            run_vaccine(d, cfg).unwrap_or_else(|err| {
                log::warn!("vaccine {} failed: {err}", d.id);
                VaccineRun {
                    report: BacktestReport::failed(&d.id, format!("backtest failed: {err}")),
                    level0_report: None,
                    log: PredictionLog::new(),
                }
            })
        })
        .collect())
}

pub fn run_full_experiment(
    datasets: &[VaccineData],
    cfg: &BacktestConfig,
) -> Result<Vec<BacktestReport>> {
    Ok(run_full_experiment_with_logs(datasets, cfg)?
        .into_iter()
        .map(|r| r.report)
        .collect())
}

/// One cell of a next-month forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCell {
    pub method: Method,
    pub predicted: f64,
    /// Set when the naive value was substituted.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub vaccine: String,
    pub month: MonthStamp,
    pub cells: Vec<ForecastCell>,
}

/// Predicts the month after the last uptake observation with every method.
/// Stacked methods are trained on the level-0 backtest predictions, so the
/// history must cover the level-0 warm-up plus at least one month. Web
/// methods need the panel to include the forecast month.
pub fn predict_next(data: &VaccineData, cfg: &BacktestConfig) -> Result<Forecast> {
    let e = data.uptake.series();
    let month = e.end().succ();
    let cfg = BacktestConfig {
        end_month: None,
        ..cfg.clone()
    };
    let run = level0_run(&data.id, &data.uptake, &data.panel, &cfg)?;

    let panel_history = data.panel.slice(e.start(), e.end())?;
    let out = step(e, &panel_history, data.panel.row(month), &cfg);
    let naive = out.naive;
    let resolve = |r: Result<f64>| match r {
        Ok(v) if v.is_finite() => (v, None),
        Ok(v) => (
            naive,
            Some(format!("non-finite prediction {v}; naive fallback")),
        ),
        Err(err) => (naive, Some(format!("{err}; naive fallback"))),
    };

    let mut level0: Vec<(Method, (f64, Option<String>))> = vec![(Method::Naive, (naive, None))];
    for (c, r) in ClinicalMethod::ALL.into_iter().zip(out.clinical) {
        level0.push((Method::Clinical(c), resolve(r)));
    }
    let wm = match (&out.members, &run.wm) {
        (Ok(members), Some(state)) => state.predict(members),
        (Ok(members), None) => wm_init(members.len(), cfg.wm_eta, cfg.wm_epsilon)?.predict(members),
        (Err(err), _) => Err(err.clone()),
    };
    level0.push((Method::Web(WebMethod::Wm), resolve(wm)));
    for (w, r) in [WebMethod::B, WebMethod::L, WebMethod::O]
        .into_iter()
        .zip(out.web)
    {
        level0.push((Method::Web(w), resolve(r)));
    }

    let streams = Streams::from_log(&data.id, &run.log)?;
    let value_of = |m: Method| {
        level0
            .iter()
            .find(|(x, _)| *x == m)
            .map(|(_, (v, _))| *v)
            .expect("level-0 value")
    };
    let mut cells: Vec<ForecastCell> = level0
        .iter()
        .map(|(method, (predicted, diagnostic))| ForecastCell {
            method: *method,
            predicted: *predicted,
            diagnostic: diagnostic.clone(),
        })
        .collect();
    let n = streams.months.len();
    let lo = match cfg.level1_window {
        Level1Window::Growing => 0,
        Level1Window::Sliding => n.saturating_sub(cfg.level1_warmup_months),
    };
    for method in Method::level1() {
        let Method::Stack {
            combiner,
            clinical,
            web,
        } = method
        else {
            unreachable!()
        };
        let samples = streams.samples(clinical as usize, web as usize, lo..n);
        let r = combine(
            combiner,
            &samples,
            value_of(Method::Clinical(clinical)),
            value_of(Method::Web(web)),
            &cfg,
        );
        let (predicted, diagnostic) = resolve(r);
        cells.push(ForecastCell {
            method,
            predicted,
            diagnostic,
        });
    }
    Ok(Forecast {
        vaccine: data.id.clone(),
        month,
        cells,
    })
}
