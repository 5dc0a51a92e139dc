use std::collections::{BTreeSet, HashMap};

use super::method::Method;
use crate::error::{Error, Result};
use crate::ts::{MonthStamp, TimeSeries, UptakeSeries};

/// One logged one-step-ahead prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub vaccine: String,
    pub method: Method,
    pub month: MonthStamp,
    pub predicted: f64,
    pub actual: f64,
    /// First and last month of the data the model was fitted on.
    pub train_start: MonthStamp,
    pub train_end: MonthStamp,
    /// Set when the model failed and the naive prediction was substituted.
    pub diagnostic: Option<String>,
}

impl LogEntry {
    pub fn is_fallback(&self) -> bool {
        self.diagnostic.is_some()
    }
}

/// Append-only record of predictions. Each (vaccine, method) stream holds
/// consecutive months with no repeats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionLog {
    entries: Vec<LogEntry>,
    last: HashMap<(String, Method), MonthStamp>,
}

impl PredictionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LogEntry>) -> Result<Self> {
        let mut log = Self::new();
        for e in entries {
            log.push(e)?;
        }
        Ok(log)
    }

    pub fn push(&mut self, entry: LogEntry) -> Result<()> {
        if !entry.predicted.is_finite() || !entry.actual.is_finite() {
            return Err(Error::InvalidValue(format!(
                "non-finite log entry for {} {} at {}",
                entry.vaccine, entry.method, entry.month
            )));
        }
        let key = (entry.vaccine.clone(), entry.method);
        if let Some(prev) = self.last.get(&key) {
            if entry.month != prev.succ() {
                return Err(Error::AlignmentError(format!(
                    "{} {}: {} does not follow {}",
                    entry.vaccine, entry.method, entry.month, prev
                )));
            }
        }
        self.last.insert(key, entry.month);
        self.entries.push(entry);
        Ok(())
    }

    pub fn extend(&mut self, other: PredictionLog) -> Result<()> {
        for e in other.entries {
            self.push(e)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vaccines(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.vaccine.as_str()).collect()
    }

    pub fn methods(&self) -> BTreeSet<Method> {
        self.entries.iter().map(|e| e.method).collect()
    }

    /// Entries satisfying `keep`, in their original order.
    pub fn filter(&self, mut keep: impl FnMut(&LogEntry) -> bool) -> PredictionLog {
        let mut out = PredictionLog::new();
        for e in self.entries.iter().filter(|e| keep(e)) {
            out.push(e.clone())
                .expect("a subsequence of a valid stream stays valid");
        }
        out
    }

    pub fn for_vaccine(&self, vaccine: &str) -> PredictionLog {
        self.filter(|e| e.vaccine == vaccine)
    }

    pub fn stream(&self, vaccine: &str, method: Method) -> impl Iterator<Item = &LogEntry> {
        let vaccine = vaccine.to_string();
        self.entries
            .iter()
            .filter(move |e| e.vaccine == vaccine && e.method == method)
    }

    /// Predictions of one stream as a series.
    pub fn series(&self, vaccine: &str, method: Method) -> Result<TimeSeries> {
        let entries: Vec<&LogEntry> = self.stream(vaccine, method).collect();
        let first = entries.first().ok_or(Error::EmptyLog)?;
        TimeSeries::new(first.month, entries.iter().map(|e| e.predicted).collect())
    }

    /// Observed values of one vaccine over every logged month.
    pub fn actuals(&self, vaccine: &str) -> Result<UptakeSeries> {
        let by_month: std::collections::BTreeMap<MonthStamp, f64> = self
            .entries
            .iter()
            .filter(|e| e.vaccine == vaccine)
            .map(|e| (e.month, e.actual))
            .collect();
        let (&first, &last) = match (by_month.keys().next(), by_month.keys().next_back()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EmptyLog),
        };
        if by_month.len() as i64 != first.months_until(last) + 1 {
            return Err(Error::AlignmentError(format!(
                "logged months for {vaccine} are not contiguous"
            )));
        }
        UptakeSeries::new(TimeSeries::new(first, by_month.into_values().collect())?)
    }

    pub fn fallback_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_fallback()).count()
    }
}
