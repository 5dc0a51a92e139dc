use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ts::{MonthStamp, TimeSeries};

/// Month-aligned query frequencies on the 0–100 Trends scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPanel {
    start: MonthStamp,
    query_names: Vec<String>,
    /// One row per month, one column per query.
    rows: Vec<Vec<f64>>,
}

impl QueryPanel {
    pub fn new(start: MonthStamp, query_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidValue("query panel has no months".into()));
        }
        let mut seen = HashSet::new();
        for name in &query_names {
            if name.trim().is_empty() {
                return Err(Error::InvalidValue("empty query name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidValue(format!("duplicate query {name:?}")));
            }
        }
        let n = query_names.len();
        for (k, row) in rows.iter().enumerate() {
            let month = start.add_months(k as i64);
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some((i, v)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=100.0).contains(*v))
            {
                return Err(Error::InvalidValue(format!(
                    "frequency {v} for {:?} at {month} outside [0, 100]",
                    query_names[i]
                )));
            }
        }
        Ok(Self {
            start,
            query_names,
            rows,
        })
    }

    pub fn start(&self) -> MonthStamp {
        self.start
    }

    pub fn end(&self) -> MonthStamp {
        self.start.add_months(self.rows.len() as i64 - 1)
    }

    pub fn n_queries(&self) -> usize {
        self.query_names.len()
    }

    pub fn n_months(&self) -> usize {
        self.rows.len()
    }

    pub fn query_names(&self) -> &[String] {
        &self.query_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, month: MonthStamp) -> Option<&[f64]> {
        let k = self.start.months_until(month);
        (k >= 0 && (k as usize) < self.rows.len()).then(|| self.rows[k as usize].as_slice())
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// Rows over `[from, to]`, which must lie inside the panel.
    pub fn slice(&self, from: MonthStamp, to: MonthStamp) -> Result<QueryPanel> {
        let a = self.start.months_until(from);
        let b = self.start.months_until(to);
        if a < 0 || b < a || b as usize >= self.rows.len() {
            return Err(Error::AlignmentError(format!(
                "panel covers {}..{}, requested {from}..{to}",
                self.start,
                self.end()
            )));
        }
        Ok(QueryPanel {
            start: from,
            query_names: self.query_names.clone(),
            rows: self.rows[a as usize..=b as usize].to_vec(),
        })
    }

    /// Panel restricted to the given query columns, in the given order.
    pub fn select(&self, queries: &[usize]) -> QueryPanel {
        QueryPanel {
            start: self.start,
            query_names: queries
                .iter()
                .map(|&i| self.query_names[i].clone())
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| queries.iter().map(|&i| r[i]).collect())
                .collect(),
        }
    }
}

/// Panel rows matching each month of `e`, paired with the targets.
pub(crate) fn design(q: &QueryPanel, e: &TimeSeries) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let sub = q.slice(e.start(), e.end()).map_err(|_| {
        Error::AlignmentError(format!(
            "panel covers {}..{}, target covers {}..{}",
            q.start(),
            q.end(),
            e.start(),
            e.end()
        ))
    })?;
    Ok((sub.rows, e.values().to_vec()))
}
