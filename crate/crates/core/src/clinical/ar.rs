//! Autoregressive model fitted by ordinary least squares on the lag design.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::ts::TimeSeries;

/// `Ê(t) = mu + Σ betas[i] · E(t - 1 - i)`; `betas[0]` weights the most
/// recent observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub mu: f64,
    pub betas: Vec<f64>,
    /// Set when the lag design was rank deficient and ridge jitter was used.
    pub ridge_fallback: bool,
}

/// Fits an AR(m) model with the ridge fallback enabled.
pub fn fit_ar(e: &TimeSeries, m: usize) -> Result<ArModel> {
    fit_ar_values(e.values(), m, true)
}

/// Fits an AR(m) model on raw values.
///
/// Needs at least `2m + 1` values so that the `n - m` design rows cover the
/// `m + 1` unknowns.
pub fn fit_ar_values(values: &[f64], m: usize, ridge_fallback: bool) -> Result<ArModel> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "AR order must be at least 1".into(),
        ));
    }
    let needed = 2 * m + 1;
    if values.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            available: values.len(),
        });
    }
    let (x, y) = lag_design(values, m);
    let sol = least_squares(&x, &y, ridge_fallback)?;
    if sol.ridge {
        log::warn!("AR({m}) lag design is rank deficient; applied ridge jitter");
    }
    Ok(ArModel {
        mu: sol.coef[0],
        betas: sol.coef.iter().skip(1).copied().collect(),
        ridge_fallback: sol.ridge,
    })
}

/// Rows `[1, v[t-1], ..., v[t-m]]` for `t = m..n`, with targets `v[t]`.
pub(crate) fn lag_design(values: &[f64], m: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = values.len() - m;
    let x = DMatrix::from_fn(
        rows,
        m + 1,
        |r, c| if c == 0 { 1.0 } else { values[r + m - c] },
    );
    let y = DVector::from_iterator(rows, values[m..].iter().copied());
    (x, y)
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.betas.len()
    }

    /// One-step prediction from the `m` most recent values, most recent first.
    pub fn predict(&self, recent: &[f64]) -> Result<f64> {
        if recent.len() != self.betas.len() {
            return Err(Error::LagMismatch {
                expected: self.betas.len(),
                got: recent.len(),
            });
        }
        Ok(self.mu
            + self
                .betas
                .iter()
                .zip(recent)
                .map(|(b, v)| b * v)
                .sum::<f64>())
    }

    /// Predicts the value following `history` (oldest first).
    pub fn predict_next(&self, history: &[f64]) -> Result<f64> {
        let m = self.order();
        if history.len() < m {
            return Err(Error::SeriesTooShort {
                needed: m,
                available: history.len(),
            });
        }
        let recent: Vec<f64> = history.iter().rev().take(m).copied().collect();
        self.predict(&recent)
    }
}
