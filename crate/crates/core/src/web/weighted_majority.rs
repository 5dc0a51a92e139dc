//! Weighted-majority combination of the bagged members.
//!
//! Weights are kept in log space. A member's weight is multiplied by
//! `exp(-eta)` whenever the combined prediction misses by more than
//! `epsilon_tol` and the member itself also misses by more than
//! `epsilon_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ETA: f64 = 5.0;
pub const DEFAULT_EPSILON: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmState {
    log_weights: Vec<f64>,
    eta: f64,
    epsilon_tol: f64,
}

/// Unit weights for `member_count` members.
pub fn wm_init(member_count: usize, eta: f64, epsilon_tol: f64) -> Result<WmState> {
    if member_count == 0 {
        return Err(Error::InvalidParameter(
            "weighted majority needs at least one member".into(),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta = {eta}")));
    }
    if !(epsilon_tol > 0.0 && epsilon_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon_tol}")));
    }
    Ok(WmState {
        log_weights: vec![0.0; member_count],
        eta,
        epsilon_tol,
    })
}

impl WmState {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn epsilon_tol(&self) -> f64 {
        self.epsilon_tol
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Weights on the linear scale. Very old penalties can underflow here;
    /// predictions use the log weights and are unaffected.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    fn check(&self, preds: &[f64]) -> Result<()> {
        if preds.len() != self.log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.log_weights.len(),
                got: preds.len(),
            });
        }
        Ok(())
    }

    /// `Σ w_i p_i / Σ w_i`.
    pub fn predict(&self, member_predictions: &[f64]) -> Result<f64> {
        self.check(member_predictions)?;
        let top = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (lw, p) in self.log_weights.iter().zip(member_predictions) {
            let w = (lw - top).exp();
            num += w * p;
            den += w;
        }
        Ok(num / den)
    }

    /// New state after observing `actual`; `self` is left untouched.
    pub fn update(
        &self,
        member_predictions: &[f64],
        overall_prediction: f64,
        actual: f64,
    ) -> Result<WmState> {
        self.check(member_predictions)?;
        let mut next = self.clone();
        if (overall_prediction - actual).abs() <= self.epsilon_tol {
            return Ok(next);
        }
        for (lw, p) in next.log_weights.iter_mut().zip(member_predictions) {
            if (p - actual).abs() > self.epsilon_tol {
                *lw -= self.eta;
            }
        }
        Ok(next)
    }
}

pub fn wm_predict(state: &WmState, member_predictions: &[f64]) -> Result<f64> {
    state.predict(member_predictions)
}

pub fn wm_update(
    state: &WmState,
    member_predictions: &[f64],
    overall_prediction: f64,
    actual: f64,
) -> Result<WmState> {
    state.update(member_predictions, overall_prediction, actual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init() {
        let s = wm_init(58, DEFAULT_ETA, DEFAULT_EPSILON).unwrap();
        assert_eq!(s.weights(), vec![1.0; 58]);
        assert_eq!(s.eta(), 5.0);
        assert_eq!(s.epsilon_tol(), 2.0);
        assert!(wm_init(0, 5.0, 2.0).is_err());
    }

    #[test]
    fn weighted_average() {
        let s = wm_init(3, 5.0, 2.0).unwrap();
        assert!((s.predict(&[1.0, 2.0, 6.0]).unwrap() - 3.0).abs() < 1e-12);
        let s = WmState {
            log_weights: vec![0.0, -5.0],
            eta: 5.0,
            epsilon_tol: 2.0,
        };
        let e5 = (-5f64).exp();
        let expected = (10.0 + 1000.0 * e5) / (1.0 + e5);
        assert!((s.predict(&[10.0, 1000.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 16.625).abs() < 1e-3);
        let one = wm_init(1, 5.0, 2.0).unwrap();
        assert_eq!(one.predict(&[4.2]).unwrap(), 4.2);
        assert!(matches!(
            one.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn update_rules() {
        let s = wm_init(2, 5.0, 2.0).unwrap();
        // overall miss of 1.5 is inside the tolerance
        assert_eq!(s.update(&[0.0, 50.0], 51.5, 50.0).unwrap(), s);

        let s1 = s.update(&[50.5, 60.0], 55.0, 50.0).unwrap();
        assert_eq!(s1.weights(), vec![1.0, (-5f64).exp()]);
        assert_eq!(s.weights(), vec![1.0, 1.0]);

        let s2 = s1.update(&[50.5, 60.0], 55.0, 50.0).unwrap();
        assert_eq!(s2.weights()[1], (-10f64).exp());
    }

    proptest! {
        #[test]
        fn predict_within_member_range_and_weights_never_grow(
            rounds in prop::collection::vec((prop::collection::vec(-100f64..100.0, 4), -100f64..100.0), 1..200),
        ) {
            let mut s = wm_init(4, 5.0, 2.0).unwrap();
            for (preds, actual) in rounds {
                let p = s.predict(&preds).unwrap();
                let lo = preds.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = preds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
                let next = s.update(&preds, p, actual).unwrap();
                for (a, b) in next.log_weights().iter().zip(s.log_weights()) {
                    prop_assert!(a <= b);
                    prop_assert!(a.is_finite());
                }
                s = next;
            }
        }
    }
}
