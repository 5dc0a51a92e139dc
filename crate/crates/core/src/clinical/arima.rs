//! ARIMA(p, d, q) by conditional sum of squares.
//!
//! The series is differenced `d` times, then the ARMA part is fitted by
//! minimizing the sum of squared one-step residuals with pre-sample
//! residuals fixed at zero. The first `p` differenced values only serve as
//! lags.

use serde::{Deserialize, Serialize};

use super::ar::lag_design;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::optim::{Bounds, NelderMead};
use crate::ts::{difference_values, undifference_next, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

impl Default for ArimaOrder {
    fn default() -> Self {
        Self::new(1, 1, 1)
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub mu: f64,
    /// AR coefficients, most recent lag first.
    pub ar_betas: Vec<f64>,
    /// MA coefficients, most recent residual first.
    pub ma_phis: Vec<f64>,
    /// Last `q` in-sample residuals, most recent first.
    pub residual_history: Vec<f64>,
    /// Conditional sum of squares at the solution.
    pub css: f64,
    /// Number of residuals entering the sum of squares.
    pub n_residuals: usize,
}

const ARIMA_RESTARTS: usize = 4;
const MA_BOUND: f64 = 0.999;

/// Fits ARIMA with the given orders.
pub fn fit_arima(e: &TimeSeries, order: ArimaOrder) -> Result<ArimaModel> {
    fit_arima_values(e.values(), order)
}

pub fn fit_arima_values(values: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    let ArimaOrder { p, d, q } = order;
    let needed = p + d + q + 2;
    if values.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            available: values.len(),
        });
    }
    let w = difference_values(values, d);
    let start = css_start(&w, p)?;

    // With no MA terms the objective is linear least squares, already solved.
    let params = if q == 0 {
        start
    } else {
        let mut x0 = start;
        x0.extend(std::iter::repeat_n(0.0, q));
        let nm = NelderMead::default();
        let objective = |theta: &[f64]| css_residuals(&w, p, q, theta).0;
        // MA coefficients stay inside the invertible box; beyond it CSS
        // residuals grow geometrically and the surface has no usable minimum
        let mut lower = vec![f64::NEG_INFINITY; 1 + p];
        let mut upper = vec![f64::INFINITY; 1 + p];
        lower.extend(std::iter::repeat_n(-MA_BOUND, q));
        upper.extend(std::iter::repeat_n(MA_BOUND, q));
        let bounds = Bounds::new(lower, upper);
        let mut found = nm.minimize(objective, &x0, &bounds);
        let mut iterations = found.iterations;
        // a stalled simplex is rebuilt around its best vertex
        for _ in 0..ARIMA_RESTARTS {
            if found.converged {
                break;
            }
            found = nm.minimize(objective, &found.x, &bounds);
            iterations += found.iterations;
        }
        if !found.converged {
            return Err(Error::NonConvergence {
                what: "ARIMA CSS",
                iterations,
            });
        }
        found.x
    };

    let (css, residuals) = css_residuals(&w, p, q, &params);
    if !css.is_finite() {
        return Err(Error::InvalidValue("ARIMA residuals diverged".into()));
    }
    Ok(ArimaModel {
        order,
        mu: params[0],
        ar_betas: params[1..1 + p].to_vec(),
        ma_phis: params[1 + p..].to_vec(),
        residual_history: residuals.iter().rev().take(q).copied().collect(),
        css,
        n_residuals: residuals.len(),
    })
}

/// Picks the order with the lowest AIC over p, q in {0, 1, 2} and d in {0, 1}.
pub fn fit_arima_auto(e: &TimeSeries) -> Result<ArimaModel> {
    let mut best: Option<(f64, ArimaModel)> = None;
    let mut last_err = None;
    for d in 0..=1 {
        for p in 0..=2 {
            for q in 0..=2 {
                match fit_arima(e, ArimaOrder::new(p, d, q)) {
                    Ok(model) => {
                        let aic = model.aic();
                        if best.as_ref().is_none_or(|(b, _)| aic < *b) {
                            best = Some((aic, model));
                        }
                    }
                    Err(err) => last_err = Some(err),
                }
            }
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| last_err.unwrap_or(Error::SingularDesign))
}

/// `[mu, betas...]` from OLS on the lag design, or the mean when `p = 0`.
fn css_start(w: &[f64], p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Ok(vec![w.iter().sum::<f64>() / w.len() as f64]);
    }
    let (x, y) = lag_design(w, p);
    let sol = least_squares(&x, &y, true)?;
    Ok(sol.coef.iter().copied().collect())
}

/// Conditional sum of squares and the residual sequence for `theta =
/// [mu, betas (p), phis (q)]`.
fn css_residuals(w: &[f64], p: usize, q: usize, theta: &[f64]) -> (f64, Vec<f64>) {
    let (mu, betas, phis) = (theta[0], &theta[1..1 + p], &theta[1 + p..1 + p + q]);
    let mut residuals: Vec<f64> = Vec::with_capacity(w.len() - p);
    let mut sse = 0.0;
    for t in p..w.len() {
        let ar: f64 = betas
            .iter()
            .enumerate()
            .map(|(i, b)| b * w[t - 1 - i])
            .sum();
        let k = residuals.len();
        let ma: f64 = phis
            .iter()
            .enumerate()
            .filter(|(j, _)| *j < k)
            .map(|(j, phi)| phi * residuals[k - 1 - j])
            .sum();
        let r = w[t] - mu - ar - ma;
        sse += r * r;
        residuals.push(r);
    }
    (if sse.is_nan() { f64::INFINITY } else { sse }, residuals)
}

impl ArimaModel {
    /// Akaike information criterion on the CSS likelihood.
    pub fn aic(&self) -> f64 {
        let n = self.n_residuals.max(1) as f64;
        let k = (1 + self.order.p + self.order.q) as f64;
        n * (self.css.max(f64::MIN_POSITIVE) / n).ln() + 2.0 * k
    }

    /// One-step prediction on the differenced scale from the trailing
    /// differenced values (oldest first).
    pub fn predict_differenced(&self, diffed_tail: &[f64]) -> Result<f64> {
        let p = self.order.p;
        if diffed_tail.len() < p {
            return Err(Error::SeriesTooShort {
                needed: p,
                available: diffed_tail.len(),
            });
        }
        let n = diffed_tail.len();
        let ar: f64 = self
            .ar_betas
            .iter()
            .enumerate()
            .map(|(i, b)| b * diffed_tail[n - 1 - i])
            .sum();
        let ma: f64 = self
            .ma_phis
            .iter()
            .zip(&self.residual_history)
            .map(|(phi, r)| phi * r)
            .sum();
        Ok(self.mu + ar + ma)
    }

    /// Predicts the month after the end of `e`, which should be the series
    /// the model was fitted on (the MA terms use its stored residuals).
    pub fn predict(&self, e: &TimeSeries) -> Result<f64> {
        self.predict_next(e.values())
    }

    pub fn predict_next(&self, values: &[f64]) -> Result<f64> {
        let ArimaOrder { p, d, .. } = self.order;
        if values.len() < p + d {
            return Err(Error::SeriesTooShort {
                needed: p + d,
                available: values.len(),
            });
        }
        let tail = &values[values.len() - (p + d)..];
        let diffed = difference_values(tail, d);
        let pred = self.predict_differenced(&diffed)?;
        undifference_next(pred, tail, d)
    }
}
