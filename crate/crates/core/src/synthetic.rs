//! Seeded synthetic vaccine datasets for tests, benchmarks and demos.
//!
//! Uptake follows a level around 90% with a yearly cycle, a slow drift and
//! noise. Some queries track uptake with lags and noise, the rest are
//! unrelated seasonal signals. All frequencies lie in [0, 100].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::backtest::VaccineData;
use crate::error::Result;
use crate::ts::{MonthStamp, TimeSeries, UptakeSeries};
use crate::web::QueryPanel;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub start: MonthStamp,
    pub months: usize,
    pub n_queries: usize,
    /// Months of panel rows beyond the uptake series.
    pub panel_lead: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// January 2011 through September 2015 with 58 queries.
    pub fn published_shape(seed: u64) -> Self {
        Self {
            start: MonthStamp::new(2011, 1).expect("valid month"),
            months: 57,
            n_queries: 58,
            panel_lead: 0,
            seed,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn synthetic_vaccine(id: &str, spec: &SyntheticSpec) -> Result<VaccineData> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.months + spec.panel_lead;
    let level = 80.0 + 20.0 * rng.random::<f64>();
    let amplitude = 5.0 + 10.0 * rng.random::<f64>();
    let phase = std::f64::consts::TAU * rng.random::<f64>();
    let drift = rng.random_range(-0.15..0.15);
    let noise = 2.0 + 4.0 * rng.random::<f64>();

    let signal: Vec<f64> = (0..total)
        .map(|t| {
            let t = t as f64;
            level + drift * t + amplitude * (std::f64::consts::TAU * t / 12.0 + phase).sin()
        })
        .collect();
    let uptake: Vec<f64> = signal[..spec.months]
        .iter()
        .map(|s| (s + noise * normal(&mut rng)).max(0.0))
        .collect();

    let mut names = Vec::with_capacity(spec.n_queries);
    let mut cols = Vec::with_capacity(spec.n_queries);
    for i in 0..spec.n_queries {
        names.push(format!("query {i:02}"));
        let related = i % 3 != 2;
        let gain = rng.random_range(0.3..1.2);
        let offset = rng.random_range(10.0..40.0);
        let lag = rng.random_range(0..2usize);
        let jitter = rng.random_range(2.0..8.0);
        let own_phase = std::f64::consts::TAU * rng.random::<f64>();
        let col: Vec<f64> = (0..total)
            .map(|t| {
                let base = if related {
                    offset + gain * (signal[t.saturating_sub(lag)] - level + 30.0)
                } else {
                    offset
                        + 20.0 * (std::f64::consts::TAU * t as f64 / 12.0 + own_phase).sin()
                        + 20.0
                };
                (base + jitter * normal(&mut rng)).clamp(0.0, 100.0)
            })
            .collect();
        cols.push(col);
    }
    let rows = (0..total)
        .map(|t| cols.iter().map(|c| c[t]).collect())
        .collect();

    Ok(VaccineData {
        id: id.to_string(),
        uptake: UptakeSeries::new(TimeSeries::new(spec.start, uptake)?)?,
        panel: QueryPanel::new(spec.start, names, rows)?,
    })
}

/// Thirteen vaccines of the published shape, seeded from `seed`.
pub fn synthetic_suite(seed: u64) -> Result<Vec<VaccineData>> {
    const IDS: [&str; 13] = [
        "DiTeKiPol-1",
        "DiTeKiPol-2",
        "DiTeKiPol-3",
        "DiTeKiPol-4",
        "MMR-1",
        "MMR-2 (4)",
        "MMR-2 (12)",
        "PCV-1",
        "PCV-2",
        "PCV-3",
        "HPV-1",
        "HPV-2",
        "HPV-3",
    ];
    IDS.iter()
        .enumerate()
        .map(|(k, id)| {
            synthetic_vaccine(
                id,
                &SyntheticSpec::published_shape(seed.wrapping_add(k as u64)),
            )
        })
        .collect()
}

/// Cohort size used by [`write_experiment`].
pub const FIXTURE_COHORT: u64 = 5000;

/// Writes `vaccines` as registry, cohort and trends CSV files plus an
/// `experiment.toml` under `dir`, and returns the path of the TOML file.
/// Doses are rounded, so reloaded uptake matches to within 100 / 5000 / 2.
pub fn write_experiment(dir: &Path, vaccines: &[VaccineData]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir.join("trends"))?;
    let mut registry = std::fs::File::create(dir.join("registry.csv"))?;
    writeln!(registry, "vaccine,year,month,doses")?;
    let mut months = std::collections::BTreeSet::new();
    for v in vaccines {
        for (m, u) in v.uptake.series().iter() {
            let doses = (u * FIXTURE_COHORT as f64 / 100.0).round() as u64;
            writeln!(registry, "{},{},{},{doses}", v.id, m.year(), m.month())?;
            months.insert(m);
        }
    }
    let mut cohorts = std::fs::File::create(dir.join("cohorts.csv"))?;
    writeln!(cohorts, "year,month,expected")?;
    for m in months {
        writeln!(cohorts, "{},{},{FIXTURE_COHORT}", m.year(), m.month())?;
    }

    let mut toml = String::from("registry = \"registry.csv\"\ncohorts = \"cohorts.csv\"\n");
    for (k, v) in vaccines.iter().enumerate() {
        let file = format!("trends/{k:02}.csv");
        let mut trends = std::fs::File::create(dir.join(&file))?;
        writeln!(trends, "query,year,month,frequency")?;
        for (q, name) in v.panel.query_names().iter().enumerate() {
            for (t, row) in v.panel.rows().iter().enumerate() {
                let m = v.panel.start().add_months(t as i64);
                writeln!(trends, "{name},{},{},{}", m.year(), m.month(), row[q])?;
            }
        }
        toml.push_str(&format!(
            "\n[[vaccine]]\nid = {:?}\ntrends = {file:?}\n",
            v.id
        ));
    }
    let path = dir.join("experiment.toml");
    std::fs::write(&path, toml)?;
    Ok(path)
}
