//! Additive Holt-Winters (level, trend, seasonality).
//!
//! ```text
//! a_t = α (E(t) - s_{t-l}) + (1 - α)(a_{t-1} + b_{t-1})
//! b_t = β (a_t - a_{t-1}) + (1 - β) b_{t-1}
//! s_t = γ (E(t) - a_t) + (1 - γ) s_{t-l}
//! Ê(t) = a_{t-1} + b_{t-1} + s_{t-l}
//! ```
//!
//! The initial state is read off the first two seasons and placed one month
//! before the first observation, so the recursions then run over the whole
//! series. Smoothing parameters minimize the in-sample one-step squared error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Bounds, NelderMead};
use crate::ts::TimeSeries;

/// Start point used when the search from the primary start fails.
pub const FALLBACK_START: [f64; 3] = [0.3, 0.1, 0.1];

/// Coarse grid whose best point seeds the primary search.
const START_GRID: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl HwParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { alpha, beta, gamma })
    }
}

/// Holt-Winters state after running the recursions over a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwModel {
    pub params: HwParams,
    pub season_length: usize,
    pub level: f64,
    pub trend: f64,
    /// Seasonal component by position within the season; position 0 is the
    /// season position of the first fitted month.
    pub seasonals: Vec<f64>,
    /// Season position of the month following the fitted series.
    pub next_position: usize,
    /// In-sample sum of squared one-step errors.
    pub sse: f64,
}

impl HwModel {
    /// `a + b + s` for the upcoming month.
    pub fn predict(&self) -> f64 {
        self.level + self.trend + self.seasonals[self.next_position]
    }
}

/// Initial `(level, trend, seasonals)`, positioned one month before the
/// first observation.
///
/// Trend is the difference of the first two season means divided by `l`.
/// Seasonal `i` is the average deviation of position `i` from its season's
/// mean, after removing the within-season trend, so a series that is exactly
/// level + linear trend + periodic pattern initializes without error.
pub fn initial_state(values: &[f64], l: usize) -> Result<(f64, f64, Vec<f64>)> {
    if l == 0 {
        return Err(Error::InvalidParameter(
            "season length must be positive".into(),
        ));
    }
    if values.len() < 2 * l {
        return Err(Error::SeriesTooShort {
            needed: 2 * l,
            available: values.len(),
        });
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (m1, m2) = (mean(&values[..l]), mean(&values[l..2 * l]));
    let trend = (m2 - m1) / l as f64;
    let centre = (l as f64 - 1.0) / 2.0;
    let seasonals = (0..l)
        .map(|i| {
            let drift = trend * (i as f64 - centre);
            ((values[i] - m1 - drift) + (values[l + i] - m2 - drift)) / 2.0
        })
        .collect();
    // m1 sits at the middle of season one; step back to month -1
    let level = m1 - trend * (centre + 1.0);
    Ok((level, trend, seasonals))
}

/// Runs the recursions with fixed smoothing parameters.
pub fn run_holt_winters(values: &[f64], l: usize, params: HwParams) -> Result<HwModel> {
    let (mut a, mut b, mut s) = initial_state(values, l)?;
    let HwParams { alpha, beta, gamma } = params;
    let mut sse = 0.0;
    for (t, &x) in values.iter().enumerate() {
        let pos = t % l;
        let forecast = a + b + s[pos];
        sse += (x - forecast) * (x - forecast);
        let a_new = alpha * (x - s[pos]) + (1.0 - alpha) * (a + b);
        b = beta * (a_new - a) + (1.0 - beta) * b;
        s[pos] = gamma * (x - a_new) + (1.0 - gamma) * s[pos];
        a = a_new;
    }
    Ok(HwModel {
        params,
        season_length: l,
        level: a,
        trend: b,
        seasonals: s,
        next_position: values.len() % l,
        sse,
    })
}

/// One-step predictions for every month of `values` under fixed parameters.
pub fn one_step_predictions(values: &[f64], l: usize, params: HwParams) -> Result<Vec<f64>> {
    let (mut a, mut b, mut s) = initial_state(values, l)?;
    let HwParams { alpha, beta, gamma } = params;
    let mut out = Vec::with_capacity(values.len());
    for (t, &x) in values.iter().enumerate() {
        let pos = t % l;
        out.push(a + b + s[pos]);
        let a_new = alpha * (x - s[pos]) + (1.0 - alpha) * (a + b);
        b = beta * (a_new - a) + (1.0 - beta) * b;
        s[pos] = gamma * (x - a_new) + (1.0 - gamma) * s[pos];
        a = a_new;
    }
    Ok(out)
}

fn sse(values: &[f64], l: usize, theta: &[f64]) -> f64 {
    let params = HwParams {
        alpha: theta[0],
        beta: theta[1],
        gamma: theta[2],
    };
    run_holt_winters(values, l, params)
        .map(|m| m.sse)
        .unwrap_or(f64::INFINITY)
}

/// Fits smoothing parameters in `[0, 1]³` and returns the final state.
pub fn fit_holt_winters(e: &TimeSeries, l: usize) -> Result<HwModel> {
    fit_holt_winters_values(e.values(), l)
}

pub fn fit_holt_winters_values(values: &[f64], l: usize) -> Result<HwModel> {
    initial_state(values, l)?;
    let objective = |theta: &[f64]| sse(values, l, theta);

    let mut primary = FALLBACK_START;
    let mut best = objective(&primary);
    for &a in &START_GRID {
        for &b in &START_GRID {
            for &g in &START_GRID {
                let f = objective(&[a, b, g]);
                if f < best {
                    best = f;
                    primary = [a, b, g];
                }
            }
        }
    }

    let nm = NelderMead::default();
    let bounds = Bounds::unit_cube(3);
    let mut found = nm.minimize(objective, &primary, &bounds);
    if !found.converged {
        log::warn!("Holt-Winters search did not converge from {primary:?}; restarting");
        found = nm.minimize(objective, &FALLBACK_START, &bounds);
        if !found.converged {
            return Err(Error::NonConvergence {
                what: "Holt-Winters",
                iterations: found.iterations,
            });
        }
    }
    let params = HwParams::new(found.x[0], found.x[1], found.x[2])?;
    run_holt_winters(values, l, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ts::MonthStamp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_series() {
        let e = TimeSeries::new(MonthStamp::new(2011, 1).unwrap(), vec![42.0; 24]).unwrap();
        let model = fit_holt_winters(&e, 12).unwrap();
        assert!((model.predict() - 42.0).abs() < 1e-9);
        assert!(model.sse < 1e-18);
    }

    #[test]
    fn linear_series_with_full_smoothing() {
        let v: Vec<f64> = (0..30).map(|t| 2.0 * t as f64).collect();
        let model = run_holt_winters(&v, 12, HwParams::new(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(model.seasonals.iter().all(|s| s.abs() < 1e-12));
        assert!((model.level - 58.0).abs() < 1e-9);
        assert!((model.trend - 2.0).abs() < 1e-9);
        assert!((model.predict() - 60.0).abs() < 1e-9);
        // hand-unrolled: with alpha = beta = 1 each step sets a_t = E(t), b_t = 2
        let preds = one_step_predictions(&v, 12, model.params).unwrap();
        for (t, p) in preds.iter().enumerate() {
            assert!((p - 2.0 * t as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn seasonal_series_is_exact() {
        let pattern = [
            3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, -6.0, 5.0, 3.0, -5.0, 8.0,
        ];
        let v: Vec<f64> = (0..48).map(|t| 10.0 + pattern[t % 12]).collect();
        let model = fit_holt_winters_values(&v, 12).unwrap();
        let preds = one_step_predictions(&v, 12, model.params).unwrap();
        for (p, x) in preds.iter().zip(&v).skip(24) {
            assert!((p - x).abs() < 1e-6);
        }
        assert!((model.predict() - v[0]).abs() < 1e-6);
    }

    #[test]
    fn zero_smoothing_freezes_state() {
        let v: Vec<f64> = (0..36)
            .map(|t| 20.0 + (t as f64 * 1.3).sin() * 4.0 + t as f64 * 0.2)
            .collect();
        let (a0, b0, s0) = initial_state(&v, 12).unwrap();
        let preds = one_step_predictions(&v, 12, HwParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        for (t, p) in preds.iter().enumerate() {
            let expected = a0 + (t as f64 + 1.0) * b0 + s0[t % 12];
            assert!((p - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn direct_sum_prediction() {
        let mut seasonals = vec![0.0; 12];
        seasonals[3] = -5.0;
        let model = HwModel {
            params: HwParams::new(0.5, 0.5, 0.5).unwrap(),
            season_length: 12,
            level: 100.0,
            trend: 2.0,
            seasonals,
            next_position: 3,
            sse: 0.0,
        };
        assert_eq!(model.predict(), 97.0);
        assert_eq!(
            HwModel {
                next_position: 0,
                ..model
            }
            .predict(),
            102.0
        );
    }

    #[test]
    fn needs_two_seasons() {
        let v = vec![1.0; 23];
        assert_eq!(
            fit_holt_winters_values(&v, 12),
            Err(Error::SeriesTooShort {
                needed: 24,
                available: 23
            })
        );
        assert!(HwParams::new(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn optimizer_beats_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let v: Vec<f64> = (0..40)
                .map(|t| {
                    60.0 + 8.0 * (t as f64 * 0.52).sin()
                        + rng.random_range(-4.0..4.0)
                        + 0.3 * t as f64
                })
                .collect();
            let model = fit_holt_winters_values(&v, 12).unwrap();
            for _ in 0..100 {
                let p = HwParams::new(rng.random(), rng.random(), rng.random()).unwrap();
                let other = run_holt_winters(&v, 12, p).unwrap().sse;
                assert!(
                    model.sse <= other + 1e-9,
                    "{} > {} at {:?}",
                    model.sse,
                    other,
                    p
                );
            }
        }
    }
}
