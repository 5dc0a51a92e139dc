//! CSV loaders for registry counts, birth cohorts and query-frequency
//! exports, and the uptake computation.
//!
//! File layouts (UTF-8, header row required):
//!
//! | file     | columns                          |
//! |----------|----------------------------------|
//! | registry | `vaccine,year,month,doses`       |
//! | cohorts  | `year,month,expected`            |
//! | trends   | `query,year,month,frequency`     |

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::ts::{MonthStamp, TimeSeries, UptakeSeries};
use crate::web::QueryPanel;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{source_name}: {error}")]
    Io {
        source_name: String,
        error: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}:{line}: {message}")]
    Schema {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: query {query:?} {message}")]
    Gap {
        source_name: String,
        query: String,
        message: String,
    },
    #[error("no cohort size for {month} (needed by {vaccine})")]
    MissingCohort { vaccine: String, month: MonthStamp },
    #[error("registry for {vaccine} has no entry for {month}")]
    GapInRegistry { vaccine: String, month: MonthStamp },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

pub type IngestResult<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryRecord {
    pub vaccine: String,
    pub month: MonthStamp,
    pub doses_given: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortRecord {
    pub month: MonthStamp,
    pub expected_count: u64,
}

/// A parsed query-frequency export.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendsData {
    pub panel: QueryPanel,
    /// Queries dropped because every frequency was zero.
    pub dropped: Vec<String>,
}

/// Rows of a CSV source with 1-based physical line numbers.
struct Rows {
    name: String,
    records: Vec<(u64, csv::StringRecord)>,
}

fn read_rows(reader: impl Read, name: &str, header: &[&str]) -> IngestResult<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, e: csv::Error| IngestError::Parse {
        source_name: name.to_string(),
        line,
        message: e.to_string(),
    };
    let found = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(IngestError::Schema {
            source_name: name.to_string(),
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                found.join(",")
            ),
        });
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    Ok(Rows {
        name: name.to_string(),
        records,
    })
}

impl Rows {
    fn parse<T: std::str::FromStr>(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        col: usize,
        what: &str,
    ) -> IngestResult<T> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| IngestError::Parse {
            source_name: self.name.clone(),
            line,
            message: format!("cannot read {what} from {raw:?}"),
        })
    }

    fn schema(&self, line: u64, message: String) -> IngestError {
        IngestError::Schema {
            source_name: self.name.clone(),
            line,
            message,
        }
    }

    fn month(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        year_col: usize,
    ) -> IngestResult<MonthStamp> {
        let year: i32 = self.parse(line, rec, year_col, "year")?;
        let month: u32 = self.parse(line, rec, year_col + 1, "month")?;
        MonthStamp::new(year, month).map_err(|e| self.schema(line, e.to_string()))
    }
}

fn open(path: &Path) -> IngestResult<File> {
    File::open(path).map_err(|error| IngestError::Io {
        source_name: path.display().to_string(),
        error,
    })
}

pub fn parse_registry(reader: impl Read, name: &str) -> IngestResult<Vec<RegistryRecord>> {
    let rows = read_rows(reader, name, &["vaccine", "year", "month", "doses"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let vaccine = rec.get(0).unwrap_or("").to_string();
        if vaccine.is_empty() {
            return Err(rows.schema(*line, "empty vaccine identifier".into()));
        }
        let month = rows.month(*line, rec, 1)?;
        let doses: i64 = rows.parse(*line, rec, 3, "doses")?;
        if doses < 0 {
            return Err(rows.schema(*line, format!("negative dose count {doses}")));
        }
        if !seen.insert((vaccine.clone(), month)) {
            return Err(rows.schema(*line, format!("duplicate entry for {vaccine} at {month}")));
        }
        out.push(RegistryRecord {
            vaccine,
            month,
            doses_given: doses as u64,
        });
    }
    Ok(out)
}

pub fn parse_cohorts(reader: impl Read, name: &str) -> IngestResult<Vec<CohortRecord>> {
    let rows = read_rows(reader, name, &["year", "month", "expected"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let month = rows.month(*line, rec, 0)?;
        let expected: i64 = rows.parse(*line, rec, 2, "expected count")?;
        if expected <= 0 {
            return Err(rows.schema(
                *line,
                format!("expected count must be positive, got {expected}"),
            ));
        }
        if !seen.insert(month) {
            return Err(rows.schema(*line, format!("duplicate cohort for {month}")));
        }
        out.push(CohortRecord {
            month,
            expected_count: expected as u64,
        });
    }
    Ok(out)
}

/// Pivots a long-format export into a month-aligned panel. Queries appear
/// in order of first occurrence. A query whose frequencies are all zero is
/// dropped with a warning.
pub fn parse_trends(reader: impl Read, name: &str) -> IngestResult<TrendsData> {
    let rows = read_rows(reader, name, &["query", "year", "month", "frequency"])?;
    let mut order: Vec<String> = Vec::new();
    let mut series: BTreeMap<String, BTreeMap<MonthStamp, f64>> = BTreeMap::new();
    for (line, rec) in &rows.records {
        let query = rec.get(0).unwrap_or("").to_string();
        if query.is_empty() {
            return Err(rows.schema(*line, "empty query".into()));
        }
        let month = rows.month(*line, rec, 1)?;
        let freq: f64 = rows.parse(*line, rec, 3, "frequency")?;
        if !(0.0..=100.0).contains(&freq) {
            return Err(rows.schema(*line, format!("frequency {freq} outside [0, 100]")));
        }
        let entry = series.entry(query.clone()).or_insert_with(|| {
            order.push(query.clone());
            BTreeMap::new()
        });
        if entry.insert(month, freq).is_some() {
            return Err(rows.schema(
                *line,
                format!("duplicate frequency for {query:?} at {month}"),
            ));
        }
    }
    if order.is_empty() {
        return Err(rows.schema(1, "no data rows".into()));
    }

    let first = series
        .values()
        .filter_map(|m| m.keys().next())
        .min()
        .copied()
        .expect("non-empty");
    let last = series
        .values()
        .filter_map(|m| m.keys().next_back())
        .max()
        .copied()
        .expect("non-empty");
    let n_months = first.months_until(last) as usize + 1;
    for q in &order {
        let have = series[q].len();
        if have != n_months {
            let missing = (0..n_months as i64)
                .map(|k| first.add_months(k))
                .find(|m| !series[q].contains_key(m))
                .expect("a month is missing");
            return Err(IngestError::Gap {
                source_name: rows.name.clone(),
                query: q.clone(),
                message: format!("covers {have} of {n_months} months ({first} to {last}); first missing {missing}"),
            });
        }
    }

    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for q in order {
        if series[&q].values().all(|v| *v == 0.0) {
            log::warn!(
                "{}: dropping query {q:?}, all frequencies are zero",
                rows.name
            );
            dropped.push(q);
        } else {
            kept.push(q);
        }
    }
    if kept.is_empty() {
        return Err(rows.schema(1, "every query is all zero".into()));
    }
    let panel_rows: Vec<Vec<f64>> = (0..n_months as i64)
        .map(|k| {
            let m = first.add_months(k);
            kept.iter().map(|q| series[q][&m]).collect()
        })
        .collect();
    Ok(TrendsData {
        panel: QueryPanel::new(first, kept, panel_rows)?,
        dropped,
    })
}

pub fn load_registry(path: &Path) -> IngestResult<Vec<RegistryRecord>> {
    parse_registry(open(path)?, &path.display().to_string())
}

pub fn load_cohorts(path: &Path) -> IngestResult<Vec<CohortRecord>> {
    parse_cohorts(open(path)?, &path.display().to_string())
}

pub fn load_trends(path: &Path) -> IngestResult<TrendsData> {
    parse_trends(open(path)?, &path.display().to_string())
}

/// Registry rows of one vaccine, in file order.
pub fn registry_for(records: &[RegistryRecord], vaccine: &str) -> Vec<RegistryRecord> {
    records
        .iter()
        .filter(|r| r.vaccine == vaccine)
        .cloned()
        .collect()
}

/// `uptake(t) = 100 · doses(t) / expected(t)` over the registry's months,
/// which must be contiguous.
pub fn compute_uptake(
    registry: &[RegistryRecord],
    cohorts: &[CohortRecord],
) -> IngestResult<UptakeSeries> {
    let vaccine = registry
        .first()
        .map(|r| r.vaccine.clone())
        .ok_or(crate::Error::EmptyOverlap)?;
    if let Some(other) = registry.iter().find(|r| r.vaccine != vaccine) {
        return Err(IngestError::Config(format!(
            "registry slice mixes vaccines {vaccine:?} and {:?}",
            other.vaccine
        )));
    }
    let doses: BTreeMap<MonthStamp, u64> =
        registry.iter().map(|r| (r.month, r.doses_given)).collect();
    let cohort: BTreeMap<MonthStamp, u64> = cohorts
        .iter()
        .map(|c| (c.month, c.expected_count))
        .collect();
    let first = *doses.keys().next().expect("non-empty");
    let last = *doses.keys().next_back().expect("non-empty");
    let mut values = Vec::with_capacity(doses.len());
    for k in 0..=first.months_until(last) {
        let month = first.add_months(k);
        let d = *doses
            .get(&month)
            .ok_or_else(|| IngestError::GapInRegistry {
                vaccine: vaccine.clone(),
                month,
            })?;
        let c = *cohort
            .get(&month)
            .ok_or_else(|| IngestError::MissingCohort {
                vaccine: vaccine.clone(),
                month,
            })?;
        values.push(100.0 * d as f64 / c as f64);
    }
    Ok(UptakeSeries::new(TimeSeries::new(first, values)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_fixture() {
        let text =
            "vaccine,year,month,doses\nMMR-1,2011,1,500\nMMR-1,2011,2,510\nHPV-1,2011,1,90\n";
        let recs = parse_registry(text.as_bytes(), "reg").unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(
            recs[2],
            RegistryRecord {
                vaccine: "HPV-1".into(),
                month: MonthStamp::new(2011, 1).unwrap(),
                doses_given: 90
            }
        );
    }

    #[test]
    fn registry_errors_carry_lines() {
        let err = parse_registry(
            "vaccine,year,month,doses\nMMR-1,2011,1,5\nMMR-1,2011,x,5\n".as_bytes(),
            "reg",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 3, .. }), "{err}");
        let err = parse_registry(
            "vaccine,year,month,doses\nMMR-1,2011,1,-5\n".as_bytes(),
            "reg",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Schema { line: 2, .. }));
        let err = parse_registry(
            "vaccine,year,month,doses\nA,2011,1,5\nA,2011,1,6\n".as_bytes(),
            "reg",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Schema { line: 3, .. }));
        let err = parse_registry("vaccine,yr,month,doses\n".as_bytes(), "reg").unwrap_err();
        assert!(matches!(err, IngestError::Schema { line: 1, .. }));
        let err = parse_registry("vaccine,year,month,doses\nA,2011,13,5\n".as_bytes(), "reg")
            .unwrap_err();
        assert!(matches!(err, IngestError::Schema { line: 2, .. }));
    }

    #[test]
    fn cohort_checks() {
        let recs = parse_cohorts(
            "year,month,expected\n2011,1,1000\n2011,2,990\n".as_bytes(),
            "c",
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        let err = parse_cohorts("year,month,expected\n2011,1,0\n".as_bytes(), "c").unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }));
    }

    #[test]
    fn trends_pivot_and_checks() {
        let text = "query,year,month,frequency\na,2011,1,10\nb,2011,1,0\na,2011,2,20\nb,2011,2,0\nc,2011,1,5\nc,2011,2,7.5\n";
        let t = parse_trends(text.as_bytes(), "t").unwrap();
        assert_eq!(t.panel.query_names(), &["a".to_string(), "c".to_string()]);
        assert_eq!(t.dropped, vec!["b".to_string()]);
        assert_eq!(t.panel.rows(), &[vec![10.0, 5.0], vec![20.0, 7.5]]);

        let err =
            parse_trends("query,year,month,frequency\na,2011,1,101\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, IngestError::Schema { line: 2, .. }));

        let half = "query,year,month,frequency\na,2011,1,1\na,2011,2,1\na,2011,3,1\na,2011,4,1\nb,2011,1,1\nb,2011,2,1\n";
        match parse_trends(half.as_bytes(), "t").unwrap_err() {
            IngestError::Gap { query, .. } => assert_eq!(query, "b"),
            other => panic!("{other}"),
        }
    }

    fn reg(vaccine: &str, months: &[(u32, u64)]) -> Vec<RegistryRecord> {
        months
            .iter()
            .map(|&(m, d)| RegistryRecord {
                vaccine: vaccine.into(),
                month: MonthStamp::new(2012, m).unwrap(),
                doses_given: d,
            })
            .collect()
    }

    fn cohorts(months: &[(u32, u64)]) -> Vec<CohortRecord> {
        months
            .iter()
            .map(|&(m, c)| CohortRecord {
                month: MonthStamp::new(2012, m).unwrap(),
                expected_count: c,
            })
            .collect()
    }

    #[test]
    fn uptake_ratio() {
        let u = compute_uptake(
            &reg("V", &[(1, 500), (2, 1100)]),
            &cohorts(&[(1, 1000), (2, 1000), (3, 5)]),
        )
        .unwrap();
        assert_eq!(u.values(), &[50.0, 110.0]);
        let err =
            compute_uptake(&reg("V", &[(1, 500), (2, 10)]), &cohorts(&[(1, 1000)])).unwrap_err();
        assert!(matches!(err, IngestError::MissingCohort { .. }));
        let err = compute_uptake(
            &reg("V", &[(1, 500), (3, 10)]),
            &cohorts(&[(1, 1000), (2, 9), (3, 9)]),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::GapInRegistry { .. }));
    }
}
