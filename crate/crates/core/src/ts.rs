//! Monthly time series primitives.
//!
//! Everything in the toolkit is indexed by calendar month. A [`TimeSeries`]
//! is a start month plus one finite value per consecutive month, so index
//! arithmetic never has to deal with gaps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month. Ordering is chronological. Serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthStamp {
    year: i32,
    month: u32,
}

impl MonthStamp {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidMonth { year, month });
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since January of year 0.
    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u32,
        }
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    pub fn pred(self) -> Self {
        self.add_months(-1)
    }

    pub fn add_months(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: MonthStamp) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthStamp {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidValue(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse::<i32>().map_err(|_| bad())?;
        let month = m.parse::<u32>().map_err(|_| bad())?;
        MonthStamp::new(year, month)
    }
}

impl TryFrom<String> for MonthStamp {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthStamp> for String {
    fn from(m: MonthStamp) -> String {
        m.to_string()
    }
}

/// Contiguous monthly observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start: MonthStamp,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: MonthStamp, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort {
                needed: 1,
                available: 0,
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite value at {}",
                start.add_months(k as i64)
            )));
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> MonthStamp {
        self.start
    }

    /// Last month covered (inclusive).
    pub fn end(&self) -> MonthStamp {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn month_at(&self, k: usize) -> MonthStamp {
        self.start.add_months(k as i64)
    }

    pub fn index_of(&self, month: MonthStamp) -> Option<usize> {
        let k = self.start.months_until(month);
        (k >= 0 && (k as usize) < self.values.len()).then_some(k as usize)
    }

    pub fn get(&self, month: MonthStamp) -> Option<f64> {
        self.index_of(month).map(|k| self.values[k])
    }

    pub fn contains(&self, month: MonthStamp) -> bool {
        self.index_of(month).is_some()
    }

    /// Iterates `(month, value)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (MonthStamp, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.start.add_months(k as i64), v))
    }

    /// Sub-series over `[from, to]`, clipped to the covered range.
    pub fn slice(&self, from: MonthStamp, to: MonthStamp) -> Result<TimeSeries> {
        let lo = from.max(self.start);
        let hi = to.min(self.end());
        if lo > hi {
            return Err(Error::EmptyOverlap);
        }
        let a = self.start.months_until(lo) as usize;
        let b = self.start.months_until(hi) as usize;
        TimeSeries::new(lo, self.values[a..=b].to_vec())
    }

    /// Every observation strictly before `month`.
    pub fn before(&self, month: MonthStamp) -> Result<TimeSeries> {
        self.slice(self.start, month.pred())
    }
}

/// Monthly vaccination uptake in percent. Values may exceed 100 (catch-up
/// vaccination) but never go negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UptakeSeries(TimeSeries);

impl UptakeSeries {
    pub fn new(series: TimeSeries) -> Result<Self> {
        if let Some((m, v)) = series.iter().find(|(_, v)| *v < 0.0) {
            return Err(Error::InvalidValue(format!("negative uptake {v} at {m}")));
        }
        Ok(Self(series))
    }

    pub fn series(&self) -> &TimeSeries {
        &self.0
    }

    pub fn into_series(self) -> TimeSeries {
        self.0
    }
}

impl std::ops::Deref for UptakeSeries {
    type Target = TimeSeries;

    fn deref(&self) -> &TimeSeries {
        &self.0
    }
}

/// Truncates both series to their shared month range.
pub fn align(a: &TimeSeries, b: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    if lo > hi {
        return Err(Error::EmptyOverlap);
    }
    Ok((a.slice(lo, hi)?, b.slice(lo, hi)?))
}

/// Applies first differencing `d` times. The result starts `d` months later.
pub fn difference(s: &TimeSeries, d: usize) -> Result<TimeSeries> {
    if s.len() <= d {
        return Err(Error::SeriesTooShort {
            needed: d + 1,
            available: s.len(),
        });
    }
    let values = difference_values(s.values(), d);
    TimeSeries::new(s.start().add_months(d as i64), values)
}

pub(crate) fn difference_values(values: &[f64], d: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// The `d` values that `undifference` needs to invert `difference(s, d)`:
/// the first value of each intermediate differenced series, order 0 first.
pub fn difference_heads(s: &TimeSeries, d: usize) -> Result<Vec<f64>> {
    if s.len() <= d {
        return Err(Error::SeriesTooShort {
            needed: d + 1,
            available: s.len(),
        });
    }
    let mut heads = Vec::with_capacity(d);
    let mut cur = s.values().to_vec();
    for _ in 0..d {
        heads.push(cur[0]);
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(heads)
}

/// Inverse of [`difference`] given the heads from [`difference_heads`].
pub fn undifference(diffed: &TimeSeries, heads: &[f64]) -> Result<TimeSeries> {
    let d = heads.len();
    let mut cur = diffed.values().to_vec();
    for &head in heads.iter().rev() {
        let mut next = Vec::with_capacity(cur.len() + 1);
        let mut acc = head;
        next.push(acc);
        for v in &cur {
            acc += v;
            next.push(acc);
        }
        cur = next;
    }
    TimeSeries::new(diffed.start().add_months(-(d as i64)), cur)
}

/// Next value on the original scale, given a one-step prediction of the
/// `d`-times differenced series and the trailing observations.
///
/// `tail` must hold at least `d` values; the last `d` are used.
pub fn undifference_next(diff_pred: f64, tail: &[f64], d: usize) -> Result<f64> {
    if tail.len() < d {
        return Err(Error::SeriesTooShort {
            needed: d,
            available: tail.len(),
        });
    }
    // Level k of the differencing tower ends in last_k; the next value at
    // level k is last_k plus the next value at level k + 1.
    let window = &tail[tail.len() - d..];
    let lasts: Vec<f64> = (0..d)
        .map(|k| {
            *difference_values(window, k)
                .last()
                .expect("window holds d values")
        })
        .collect();
    Ok(lasts.iter().rev().fold(diff_pred, |acc, last| acc + last))
}

/// Predicts month `t` as the observation at `t - 1`.
pub fn naive_forecast(e: &TimeSeries, t: MonthStamp) -> Result<f64> {
    e.get(t.pred()).ok_or(Error::MissingHistory(t.pred()))
}

/// Root mean squared error over an identical month range.
pub fn rmse(predicted: &TimeSeries, actual: &TimeSeries) -> Result<f64> {
    if predicted.start() != actual.start() || predicted.len() != actual.len() {
        let (p, a) = align(predicted, actual)?;
        if p.len() != predicted.len() || a.len() != actual.len() {
            return Err(Error::AlignmentError(format!(
                "rmse needs identical ranges, got {}..{} and {}..{}",
                predicted.start(),
                predicted.end(),
                actual.start(),
                actual.end()
            )));
        }
    }
    Ok(rmse_values(predicted.values(), actual.values()))
}

pub(crate) fn rmse_values(predicted: &[f64], actual: &[f64]) -> f64 {
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    (sse / predicted.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(y: i32, mo: u32) -> MonthStamp {
        MonthStamp::new(y, mo).unwrap()
    }

    fn ts(start: MonthStamp, v: &[f64]) -> TimeSeries {
        TimeSeries::new(start, v.to_vec()).unwrap()
    }

    #[test]
    fn month_ordering_and_successor() {
        assert!(m(2011, 12) < m(2012, 1));
        assert!(m(2012, 3) < m(2012, 4));
        assert_eq!(m(2012, 12).succ(), m(2013, 1));
        assert_eq!(m(2013, 1).pred(), m(2012, 12));
        assert_eq!(m(2011, 1).months_until(m(2015, 9)), 56);
        assert!(MonthStamp::new(2012, 13).is_err());
        assert!(MonthStamp::new(2012, 0).is_err());
        assert_eq!("2013-07".parse::<MonthStamp>().unwrap(), m(2013, 7));
        assert_eq!(m(2013, 7).to_string(), "2013-07");
    }

    #[test]
    fn series_rejects_empty_and_non_finite() {
        assert!(TimeSeries::new(m(2011, 1), vec![]).is_err());
        assert!(TimeSeries::new(m(2011, 1), vec![1.0, f64::NAN]).is_err());
        assert!(UptakeSeries::new(ts(m(2011, 1), &[1.0, -0.5])).is_err());
        assert!(UptakeSeries::new(ts(m(2011, 1), &[1.0, 140.0])).is_ok());
    }

    #[test]
    fn align_intersects() {
        let a = ts(m(2011, 1), &(0..24).map(f64::from).collect::<Vec<_>>());
        let b = ts(m(2011, 6), &(0..25).map(f64::from).collect::<Vec<_>>());
        let (x, y) = align(&a, &b).unwrap();
        assert_eq!((x.start(), x.end()), (m(2011, 6), m(2012, 12)));
        assert_eq!((y.start(), y.end()), (m(2011, 6), m(2012, 12)));
        assert_eq!(x.values()[0], 5.0);
        assert_eq!(y.values()[0], 0.0);

        let (x, y) = align(&a, &a).unwrap();
        assert_eq!(x, a);
        assert_eq!(y, a);

        let c = ts(m(2013, 1), &[1.0; 12]);
        let d = ts(m(2011, 1), &[1.0; 12]);
        assert_eq!(align(&c, &d), Err(Error::EmptyOverlap));
    }

    #[test]
    fn difference_examples() {
        let s = ts(m(2011, 1), &[1.0, 3.0, 6.0, 10.0]);
        let d1 = difference(&s, 1).unwrap();
        assert_eq!(d1.values(), &[2.0, 3.0, 4.0]);
        assert_eq!(d1.start(), m(2011, 2));
        assert_eq!(difference(&s, 0).unwrap(), s);
        let c = ts(m(2011, 1), &[5.0, 5.0, 5.0]);
        assert_eq!(difference(&c, 2).unwrap().values(), &[0.0]);
        assert!(matches!(
            difference(&c, 3),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn undifference_next_examples() {
        assert_eq!(undifference_next(1.0, &[41.0], 1).unwrap(), 42.0);
        // quadratic 1,4,9 -> second differences constant 2; next is 16
        assert_eq!(undifference_next(2.0, &[1.0, 4.0, 9.0], 2).unwrap(), 16.0);
        assert_eq!(undifference_next(3.5, &[], 0).unwrap(), 3.5);
    }

    #[test]
    fn naive_examples() {
        let e = ts(m(2013, 1), &[10.0, 20.0, 30.0]);
        assert_eq!(naive_forecast(&e, m(2013, 3)).unwrap(), 20.0);
        assert_eq!(naive_forecast(&e, m(2013, 4)).unwrap(), 30.0);
        assert_eq!(
            naive_forecast(&e, m(2013, 1)),
            Err(Error::MissingHistory(m(2012, 12)))
        );
        let c = ts(m(2013, 1), &[7.0; 6]);
        for k in 1..6 {
            assert_eq!(naive_forecast(&c, c.month_at(k)).unwrap(), 7.0);
        }
    }

    #[test]
    fn rmse_examples() {
        let a = ts(m(2013, 1), &[4.0, 3.0]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let p = ts(m(2013, 1), &[0.0, 3.0]);
        assert!((rmse(&p, &a).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let far = ts(m(2016, 1), &[0.0, 3.0]);
        assert_eq!(rmse(&far, &a), Err(Error::EmptyOverlap));
        let partial = ts(m(2013, 2), &[0.0, 3.0]);
        assert!(matches!(rmse(&partial, &a), Err(Error::AlignmentError(_))));
    }

    fn arb_series() -> impl Strategy<Value = TimeSeries> {
        prop::collection::vec(-1e3f64..1e3, 1..40)
            .prop_map(|v| TimeSeries::new(MonthStamp::new(2011, 1).unwrap(), v).unwrap())
    }

    proptest! {
        #[test]
        fn difference_round_trips(s in arb_series(), d in 0usize..5) {
            prop_assume!(d < s.len());
            let heads = difference_heads(&s, d).unwrap();
            let scale = s.values().iter().fold(0f64, |m, v| m.max(v.abs()));
            let back = undifference(&difference(&s, d).unwrap(), &heads).unwrap();
            prop_assert_eq!(back.start(), s.start());
            for (x, y) in back.values().iter().zip(s.values()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + scale));
            }
        }

        #[test]
        fn rmse_reflection_and_shift(
            pairs in prop::collection::vec((-100f64..100.0, -100f64..100.0), 1..30),
            c in -50f64..50.0,
        ) {
            let start = MonthStamp::new(2012, 5).unwrap();
            let p = TimeSeries::new(start, pairs.iter().map(|x| x.0).collect()).unwrap();
            let a = TimeSeries::new(start, pairs.iter().map(|x| x.1).collect()).unwrap();
            let base = rmse(&p, &a).unwrap();
            prop_assert!(base >= 0.0);
            let mirrored = TimeSeries::new(start, pairs.iter().map(|x| 2.0 * x.1 - x.0).collect()).unwrap();
            prop_assert!((rmse(&mirrored, &a).unwrap() - base).abs() < 1e-9);
            let ps = TimeSeries::new(start, pairs.iter().map(|x| x.0 + c).collect()).unwrap();
            let as_ = TimeSeries::new(start, pairs.iter().map(|x| x.1 + c).collect()).unwrap();
            prop_assert!((rmse(&ps, &as_).unwrap() - base).abs() < 1e-9);
        }

        #[test]
        fn align_is_idempotent(s1 in 0i64..30, n1 in 1usize..30, s2 in 0i64..30, n2 in 1usize..30) {
            let base = MonthStamp::new(2011, 1).unwrap();
            let a = TimeSeries::new(base.add_months(s1), vec![1.0; n1]).unwrap();
            let b = TimeSeries::new(base.add_months(s2), vec![2.0; n2]).unwrap();
            if let Ok((x, y)) = align(&a, &b) {
                let (x2, y2) = align(&x, &y).unwrap();
                prop_assert_eq!(x2, x);
                prop_assert_eq!(y2, y);
            }
        }
    }
}
