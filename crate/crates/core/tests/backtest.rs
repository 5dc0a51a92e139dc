use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uptake_core::backtest::{
    run_level0_backtest, run_level1_backtest, run_vaccine, BacktestConfig, ClinicalMethod,
    LogEntry, Method, PredictionLog, VaccineData,
};
use uptake_core::synthetic::{synthetic_vaccine, SyntheticSpec};
use uptake_core::web::QueryPanel;
use uptake_core::{Error, MonthStamp, TimeSeries, UptakeSeries};

fn small(seed: u64, months: usize) -> VaccineData {
    let spec = SyntheticSpec {
        start: MonthStamp::new(2011, 1).unwrap(),
        months,
        n_queries: 14,
        panel_lead: 0,
        seed,
    };
    synthetic_vaccine("V", &spec).unwrap()
}

fn ym(y: i32, m: u32) -> MonthStamp {
    MonthStamp::new(y, m).unwrap()
}

fn months_of(log: &PredictionLog, method: Method) -> Vec<MonthStamp> {
    log.stream("V", method).map(|e| e.month).collect()
}

#[test]
fn published_calendar() {
    let data = synthetic_vaccine("V", &SyntheticSpec::published_shape(1)).unwrap();
    assert_eq!(data.uptake.series().end(), ym(2015, 9));
    let run = run_vaccine(&data, &BacktestConfig::default()).unwrap();
    let level0: Vec<MonthStamp> = (0..33).map(|k| ym(2013, 1).add_months(k)).collect();
    let level1: Vec<MonthStamp> = (0..21).map(|k| ym(2014, 1).add_months(k)).collect();
    for m in Method::all() {
        let expect = if m.is_level0() { &level0 } else { &level1 };
        assert_eq!(&months_of(&run.log, m), expect, "{m}");
    }
    assert_eq!(run.report.window, Some((ym(2014, 1), ym(2015, 9))));
    assert_eq!(run.report.cells.len(), 44);
    assert_eq!(
        run.level0_report.unwrap().window,
        Some((ym(2013, 1), ym(2015, 9)))
    );
}

#[test]
fn too_little_history() {
    let cfg = BacktestConfig::default();
    let data = small(2, 24);
    let err = run_level0_backtest("V", &data.uptake, &data.panel, &cfg).unwrap_err();
    assert!(matches!(err, Error::InsufficientHistory(_)), "{err}");

    let data = small(2, 36);
    let log = run_level0_backtest("V", &data.uptake, &data.panel, &cfg).unwrap();
    let err = run_level1_backtest("V", &log, &data.uptake, &cfg).unwrap_err();
    assert!(matches!(err, Error::InsufficientHistory(_)), "{err}");

    let late = BacktestConfig {
        end_month: Some(ym(2020, 1)),
        ..cfg.clone()
    };
    assert!(run_level0_backtest("V", &data.uptake, &data.panel, &late).is_err());

    let short_panel = QueryPanel::new(
        data.panel.start(),
        data.panel.query_names().to_vec(),
        data.panel.rows()[..30].to_vec(),
    )
    .unwrap();
    let err = run_level0_backtest("V", &data.uptake, &short_panel, &cfg).unwrap_err();
    assert!(matches!(err, Error::AlignmentError(_)), "{err}");
}

#[test]
fn deterministic_across_runs() {
    let data = small(3, 40);
    let cfg = BacktestConfig {
        seed: 11,
        ..BacktestConfig::default()
    };
    let a = run_vaccine(&data, &cfg).unwrap();
    let b = run_vaccine(&data, &cfg).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.report, b.report);
}

#[test]
fn naive_column_matches_shifted_series() {
    let data = small(4, 45);
    let run = run_vaccine(&data, &BacktestConfig::default()).unwrap();
    let (lo, hi) = run.report.window.unwrap();
    let e = data.uptake.series();
    let mut sq = 0.0;
    let mut n = 0usize;
    let mut t = lo;
    while t <= hi {
        let d = e.get(t.pred()).unwrap() - e.get(t).unwrap();
        sq += d * d;
        n += 1;
        t = t.succ();
    }
    let oracle = (sq / n as f64).sqrt();
    assert_eq!(
        run.report.rmse(Method::Naive).unwrap().to_bits(),
        oracle.to_bits()
    );
}

#[test]
fn ar_beats_naive_on_mean_reverting_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = 40.0;
    let values: Vec<f64> = (0..57)
        .map(|_| {
            x = 20.0 + 0.5 * x + (rng.random::<f64>() - 0.5) * 6.0;
            x
        })
        .collect();
    let start = ym(2011, 1);
    let uptake = UptakeSeries::new(TimeSeries::new(start, values).unwrap()).unwrap();
    let base = small(5, 57);
    let data = VaccineData {
        id: "V".into(),
        uptake,
        panel: base.panel,
    };
    let cfg = BacktestConfig {
        ar_lags: 1,
        ..BacktestConfig::default()
    };
    let run = run_vaccine(&data, &cfg).unwrap();
    let ar = run
        .report
        .cell(Method::Clinical(ClinicalMethod::Ar))
        .unwrap();
    assert!(
        ar.beats_naive,
        "AR {} vs naive {}",
        ar.rmse,
        run.report.rmse(Method::Naive).unwrap()
    );
}

#[test]
fn short_warmup_ar_falls_back_with_diagnostic() {
    let data = small(6, 30);
    let log =
        run_level0_backtest("V", &data.uptake, &data.panel, &BacktestConfig::default()).unwrap();
    let first: &LogEntry = log
        .stream("V", Method::Clinical(ClinicalMethod::Ar))
        .next()
        .unwrap();
    let naive = log.stream("V", Method::Naive).next().unwrap();
    assert!(first.is_fallback());
    assert_eq!(first.predicted, naive.predicted);
    // with 25 months of history the AR(12) fit is possible
    assert!(!log
        .stream("V", Method::Clinical(ClinicalMethod::Ar))
        .nth(1)
        .unwrap()
        .is_fallback());
}

/// Copies `data` with uptake from `t` on and panel rows after `t` replaced
/// by noise.
fn corrupt_after(data: &VaccineData, t: MonthStamp, seed: u64) -> VaccineData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = data.uptake.series();
    let values = e
        .iter()
        .map(|(m, v)| {
            if m >= t {
                rng.random_range(0.0..150.0)
            } else {
                v
            }
        })
        .collect();
    let rows = data
        .panel
        .rows()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            if data.panel.start().add_months(k as i64) > t {
                row.iter().map(|_| rng.random_range(0.0..100.0)).collect()
            } else {
                row.clone()
            }
        })
        .collect();
    VaccineData {
        id: data.id.clone(),
        uptake: UptakeSeries::new(TimeSeries::new(e.start(), values).unwrap()).unwrap(),
        panel: QueryPanel::new(data.panel.start(), data.panel.query_names().to_vec(), rows)
            .unwrap(),
    }
}

fn predictions_at(log: &PredictionLog, t: MonthStamp) -> Vec<(Method, u64, Option<String>)> {
    log.entries()
        .iter()
        .filter(|e| e.month == t)
        .map(|e| (e.method, e.predicted.to_bits(), e.diagnostic.clone()))
        .collect()
}

#[test]
fn corrupting_the_future_changes_nothing() {
    let data = small(7, 44);
    let cfg = BacktestConfig::default();
    let clean = run_vaccine(&data, &cfg).unwrap().log;
    for (k, t) in [ym(2013, 3), ym(2014, 2), ym(2014, 8)]
        .into_iter()
        .enumerate()
    {
        let dirty = run_vaccine(&corrupt_after(&data, t, k as u64), &cfg)
            .unwrap()
            .log;
        let before = predictions_at(&clean, t);
        assert!(!before.is_empty());
        assert_eq!(before, predictions_at(&dirty, t), "month {t}");
    }
}

#[test]
fn extending_the_series_keeps_earlier_predictions() {
    let long = small(8, 42);
    let e = long.uptake.series();
    let short = VaccineData {
        id: "V".into(),
        uptake: UptakeSeries::new(e.slice(e.start(), e.end().pred()).unwrap()).unwrap(),
        panel: long.panel.clone(),
    };
    let cfg = BacktestConfig::default();
    let a = run_vaccine(&short, &cfg).unwrap().log;
    let b = run_vaccine(&long, &cfg).unwrap().log;
    for entry in a.entries() {
        let other = b
            .stream("V", entry.method)
            .find(|x| x.month == entry.month)
            .unwrap();
        assert_eq!(entry, other);
    }
    assert!(b.len() > a.len());
}

#[test]
fn every_cell_uses_the_same_window() {
    let data = small(9, 40);
    let run = run_vaccine(&data, &BacktestConfig::default()).unwrap();
    let (lo, hi) = run.report.window.unwrap();
    for m in Method::all() {
        let months: Vec<MonthStamp> = months_of(&run.log, m)
            .into_iter()
            .filter(|t| *t >= lo && *t <= hi)
            .collect();
        assert_eq!(months.len() as i64, lo.months_until(hi) + 1, "{m}");
    }
}
