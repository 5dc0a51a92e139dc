use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::log::PredictionLog;
use super::method::{Block, Method};
use crate::error::{Error, Result};
use crate::ts::{rmse_values, MonthStamp, UptakeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub method: Method,
    pub rmse: f64,
    /// Strictly lower RMSE than the naive baseline.
    pub beats_naive: bool,
    /// Lowest RMSE within the method's table block (ties all count).
    pub is_row_min: bool,
}

/// RMSE per method for one vaccine over one common window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub vaccine: String,
    /// First and last evaluated month; `None` when the vaccine failed.
    pub window: Option<(MonthStamp, MonthStamp)>,
    pub cells: Vec<ReportCell>,
    pub annotations: Vec<String>,
}

impl BacktestReport {
    pub fn failed(vaccine: &str, reason: String) -> Self {
        Self {
            vaccine: vaccine.to_string(),
            window: None,
            cells: Vec::new(),
            annotations: vec![reason],
        }
    }

    pub fn cell(&self, method: Method) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.method == method)
    }

    pub fn rmse(&self, method: Method) -> Option<f64> {
        self.cell(method).map(|c| c.rmse)
    }
}

/// Sets `beats_naive` and `is_row_min` from the RMSE values.
pub fn mark_cells(cells: &mut [ReportCell]) {
    let naive = cells
        .iter()
        .find(|c| c.method == Method::Naive)
        .map(|c| c.rmse);
    let mut block_min: BTreeMap<Block, f64> = BTreeMap::new();
    for c in cells.iter() {
        let m = block_min.entry(c.method.block()).or_insert(f64::INFINITY);
        *m = m.min(c.rmse);
    }
    for c in cells.iter_mut() {
        c.beats_naive = c.method != Method::Naive && naive.is_some_and(|n| c.rmse < n);
        c.is_row_min = c.rmse == block_min[&c.method.block()];
    }
}

/// RMSE of every method in `log` over the months that all of its streams
/// and `actual` share, so every cell is computed over the same window.
pub fn summarize(log: &PredictionLog, actual: &UptakeSeries) -> Result<BacktestReport> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let vaccines = log.vaccines();
    if vaccines.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "summarize expects one vaccine, got {}",
            vaccines.len()
        )));
    }
    let vaccine = *vaccines.iter().next().expect("one vaccine");
    let actual = actual.series();
    let methods = log.methods();

    let (mut lo, mut hi) = (actual.start(), actual.end());
    for &m in &methods {
        let s = log.series(vaccine, m)?;
        lo = lo.max(s.start());
        hi = hi.min(s.end());
    }
    if lo > hi {
        return Err(Error::EmptyOverlap);
    }
    let truth = actual.slice(lo, hi)?;

    let mut cells = Vec::with_capacity(methods.len());
    let mut annotations = Vec::new();
    for &method in &methods {
        let entries: Vec<_> = log
            .stream(vaccine, method)
            .filter(|e| e.month >= lo && e.month <= hi)
            .collect();
        let preds: Vec<f64> = entries.iter().map(|e| e.predicted).collect();
        let fallbacks = entries.iter().filter(|e| e.is_fallback()).count();
        if fallbacks > 0 {
            annotations.push(format!(
                "{method}: {fallbacks} of {} months used the naive fallback",
                entries.len()
            ));
        }
        cells.push(ReportCell {
            method,
            rmse: rmse_values(&preds, truth.values()),
            beats_naive: false,
            is_row_min: false,
        });
    }
    mark_cells(&mut cells);
    Ok(BacktestReport {
        vaccine: vaccine.to_string(),
        window: Some((lo, hi)),
        cells,
        annotations,
    })
}
