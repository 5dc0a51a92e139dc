//! Text output: RMSE reports as CSV or Markdown, and prediction logs as CSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backtest::{
    BacktestReport, Block, Forecast, LogEntry, Method, PredictionLog, ReportCell,
};
use crate::error::{Error, Result};
use crate::ts::MonthStamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(Error::InvalidParameter(format!(
                "unknown report format {s:?}"
            ))),
        }
    }
}

pub fn emit_report(reports: &[BacktestReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report_csv(reports),
        ReportFormat::Markdown => report_markdown(reports),
    }
}

#[derive(Serialize, Deserialize)]
struct CsvCell {
    vaccine: String,
    method: Method,
    rmse: f64,
    beats_naive: bool,
    is_row_min: bool,
}

/// RMSE values are written in shortest round-trip form, so reading the CSV
/// back gives bit-identical numbers.
fn report_csv(reports: &[BacktestReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if reports.iter().all(|r| r.cells.is_empty()) {
        w.write_record(["vaccine", "method", "rmse", "beats_naive", "is_row_min"])
            .expect("in-memory write");
    }
    for r in reports {
        for c in &r.cells {
            w.serialize(CsvCell {
                vaccine: r.vaccine.clone(),
                method: c.method,
                rmse: c.rmse,
                beats_naive: c.beats_naive,
                is_row_min: c.is_row_min,
            })
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Reads a CSV written by [`emit_report`]. Windows and annotations are not
/// part of the CSV and come back empty.
pub fn parse_report_csv(text: &str) -> Result<Vec<BacktestReport>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut reports: Vec<BacktestReport> = Vec::new();
    for row in rdr.deserialize::<CsvCell>() {
        let row = row.map_err(|e| Error::InvalidValue(format!("report csv: {e}")))?;
        let cell = ReportCell {
            method: row.method,
            rmse: row.rmse,
            beats_naive: row.beats_naive,
            is_row_min: row.is_row_min,
        };
        match reports.iter_mut().find(|r| r.vaccine == row.vaccine) {
            Some(r) => r.cells.push(cell),
            None => reports.push(BacktestReport {
                vaccine: row.vaccine,
                window: None,
                cells: vec![cell],
                annotations: vec![],
            }),
        }
    }
    Ok(reports)
}

fn markdown_cell(cell: Option<&ReportCell>) -> String {
    let Some(c) = cell else { return "n/a".into() };
    let mut s = format!("{:.3}", c.rmse);
    if c.beats_naive {
        s = format!("**{s}**");
    }
    if c.is_row_min {
        s.push_str(" (min)");
    }
    s
}

/// One table per block, one row per vaccine. Bold marks an RMSE below
/// Naive, `(min)` the lowest RMSE of the row within the table.
fn report_markdown(reports: &[BacktestReport]) -> String {
    let methods: BTreeSet<Method> = reports
        .iter()
        .flat_map(|r| r.cells.iter().map(|c| c.method))
        .collect();
    let blocks: BTreeSet<Block> = methods.iter().map(|m| m.block()).collect();
    let mut out = String::new();
    for block in blocks {
        let cols: Vec<Method> = methods
            .iter()
            .copied()
            .filter(|m| m.block() == block)
            .collect();
        let _ = writeln!(out, "## {block}\n");
        let header: Vec<String> = cols.iter().map(|m| m.short_label()).collect();
        let _ = writeln!(out, "| Vaccine | {} |", header.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(cols.len()));
        for r in reports {
            let cells: Vec<String> = cols.iter().map(|&m| markdown_cell(r.cell(m))).collect();
            let _ = writeln!(out, "| {} | {} |", r.vaccine, cells.join(" | "));
        }
        out.push('\n');
    }
    if !reports.is_empty() {
        out.push_str(
            "Bold: lower RMSE than Naive. (min): lowest RMSE in the row of that table.\n\n",
        );
    }
    let windows: Vec<&BacktestReport> = reports
        .iter()
        .filter(|r| r.window.is_some() || !r.annotations.is_empty())
        .collect();
    if !windows.is_empty() {
        out.push_str("## Notes\n\n");
        for r in windows {
            if let Some((lo, hi)) = r.window {
                let _ = writeln!(out, "- {}: evaluated {lo} to {hi}", r.vaccine);
            }
            for a in &r.annotations {
                let _ = writeln!(out, "- {}: {a}", r.vaccine);
            }
        }
    }
    out
}

/// A next-month forecast, one line or row per method.
pub fn emit_forecast(forecast: &Forecast, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["vaccine", "month", "method", "predicted", "diagnostic"])
                .expect("in-memory write");
            for c in &forecast.cells {
                w.write_record([
                    forecast.vaccine.as_str(),
                    &forecast.month.to_string(),
                    &c.method.to_string(),
                    &c.predicted.to_string(),
                    c.diagnostic.as_deref().unwrap_or(""),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush"))
                .expect("csv output is UTF-8")
        }
        ReportFormat::Markdown => {
            let mut out = format!(
                "## {} forecast for {}\n\n| Method | Predicted | Note |\n|---|---:|---|\n",
                forecast.vaccine, forecast.month
            );
            for c in &forecast.cells {
                let _ = writeln!(
                    out,
                    "| {} | {:.3} | {} |",
                    c.method,
                    c.predicted,
                    c.diagnostic.as_deref().unwrap_or("")
                );
            }
            out
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvLogRow {
    vaccine: String,
    method: Method,
    month: MonthStamp,
    predicted: f64,
    actual: f64,
    train_start: MonthStamp,
    train_end: MonthStamp,
    diagnostic: Option<String>,
}

pub fn write_log_csv(log: &PredictionLog, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidValue(format!("writing prediction log: {e}"));
    if log.is_empty() {
        w.write_record([
            "vaccine",
            "method",
            "month",
            "predicted",
            "actual",
            "train_start",
            "train_end",
            "diagnostic",
        ])
        .map_err(io)?;
    }
    for e in log.entries() {
        w.serialize(CsvLogRow {
            vaccine: e.vaccine.clone(),
            method: e.method,
            month: e.month,
            predicted: e.predicted,
            actual: e.actual,
            train_start: e.train_start,
            train_end: e.train_end,
            diagnostic: e.diagnostic.clone(),
        })
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidValue(format!("writing prediction log: {e}")))
}

pub fn read_log_csv(input: impl Read) -> Result<PredictionLog> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    for row in rdr.deserialize::<CsvLogRow>() {
        let r = row.map_err(|e| Error::InvalidValue(format!("prediction log: {e}")))?;
        entries.push(LogEntry {
            vaccine: r.vaccine,
            method: r.method,
            month: r.month,
            predicted: r.predicted,
            actual: r.actual,
            train_start: r.train_start,
            train_end: r.train_end,
            diagnostic: r.diagnostic.filter(|d| !d.is_empty()),
        });
    }
    PredictionLog::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::{mark_cells, ClinicalMethod, WebMethod};

    fn report(vaccine: &str, cells: &[(Method, f64)]) -> BacktestReport {
        let mut cells: Vec<ReportCell> = cells
            .iter()
            .map(|&(method, rmse)| ReportCell {
                method,
                rmse,
                beats_naive: false,
                is_row_min: false,
            })
            .collect();
        mark_cells(&mut cells);
        BacktestReport {
            vaccine: vaccine.into(),
            window: None,
            cells,
            annotations: vec![],
        }
    }

    #[test]
    fn all_beat_naive() {
        let r = report(
            "V",
            &[
                (Method::Naive, 5.0),
                (Method::Clinical(ClinicalMethod::Hw), 4.0),
                (Method::Web(WebMethod::L), 3.0),
            ],
        );
        let csv = emit_report(&[r], ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "vaccine,method,rmse,beats_naive,is_row_min");
        assert_eq!(lines[1], "V,Naive,5.0,false,false");
        assert_eq!(lines[2], "V,HW,4.0,true,false");
        assert_eq!(lines[3], "V,L,3.0,true,true");
    }

    #[test]
    fn single_method_is_row_min() {
        let r = report("V", &[(Method::Web(WebMethod::O), 2.5)]);
        assert!(r.cells[0].is_row_min);
        assert!(emit_report(&[r], ReportFormat::Markdown).contains("| V | 2.500 (min) |"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = report(
            "V,1",
            &[
                (Method::Naive, 0.1 + 0.2),
                (Method::Clinical(ClinicalMethod::Ar), 1.0 / 3.0),
            ],
        );
        let back =
            parse_report_csv(&emit_report(std::slice::from_ref(&r), ReportFormat::Csv)).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!(
            "markdown".parse::<ReportFormat>().unwrap(),
            ReportFormat::Markdown
        );
        assert!("html".parse::<ReportFormat>().is_err());
    }
}
