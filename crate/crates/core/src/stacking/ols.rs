use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StackSample;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// `Ê(t) = mu + beta1 · Êc(t) + beta2 · Êw(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsStackModel {
    pub mu: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Set when the two streams were collinear and ridge jitter was used.
    pub ridge_fallback: bool,
}

pub fn fit_stack_ols(samples: &[StackSample]) -> Result<OlsStackModel> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            available: samples.len(),
        });
    }
    let x = DMatrix::from_fn(samples.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => samples[r].e_c,
        _ => samples[r].e_w,
    });
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.target));
    let sol = least_squares(&x, &y, true)?;
    if sol.ridge {
        log::warn!("stacking streams are collinear; applied ridge jitter");
    }
    Ok(OlsStackModel {
        mu: sol.coef[0],
        beta1: sol.coef[1],
        beta2: sol.coef[2],
        ridge_fallback: sol.ridge,
    })
}

impl OlsStackModel {
    pub fn predict(&self, e_c: f64, e_w: f64) -> f64 {
        self.mu + self.beta1 * e_c + self.beta2 * e_w
    }
}

pub fn predict_stack_ols(model: &OlsStackModel, e_c: f64, e_w: f64) -> f64 {
    model.predict(e_c, e_w)
}
