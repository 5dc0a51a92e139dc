//! Epsilon-insensitive support vector regression over the two level-0
//! streams, solved in the dual with an unpenalized bias.
//!
//! The dual is written over `2n` non-negative variables `(α, α*)` and solved
//! by sequential minimal optimization with second-order working-set
//! selection. The returned dual coefficient of sample `i` is
//! `β_i = α_i - α*_i`, so `|β_i| ≤ C` and `Σ β_i = 0`, and the regression
//! function is `f(x) = Σ β_i K(x_i, x) + b`.

use serde::{Deserialize, Serialize};

use super::StackSample;
use crate::error::{Error, Result};
use crate::web::Standardization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Gaussian { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64; 2], b: &[f64; 2]) -> f64 {
        match *self {
            Kernel::Linear => a[0] * b[0] + a[1] * b[1],
            Kernel::Gaussian { gamma } => {
                let d0 = a[0] - b[0];
                let d1 = a[1] - b[1];
                (-gamma * (d0 * d0 + d1 * d1)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: Kernel,
    /// Box bound on the dual coefficients (inverse of the coefficient penalty).
    pub c: f64,
    /// Half-width of the insensitive tube.
    pub eps: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrParams {
    pub fn linear() -> Self {
        Self {
            kernel: Kernel::Linear,
            ..Self::default()
        }
    }

    pub fn gaussian(gamma: f64) -> Self {
        Self {
            kernel: Kernel::Gaussian { gamma },
            ..Self::default()
        }
    }
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Linear,
            c: 1.0,
            eps: 0.1,
            tol: 1e-6,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrStackModel {
    pub kernel: Kernel,
    pub c: f64,
    pub eps: f64,
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Training inputs after standardization.
    pub support_inputs: Vec<[f64; 2]>,
    pub feature_scaling: [Standardization; 2],
    pub iterations: usize,
}

fn scaling(values: impl Iterator<Item = f64> + Clone) -> Standardization {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    Standardization {
        mean,
        scale: if sd <= 1e-12 * (1.0 + mean.abs()) {
            0.0
        } else {
            sd
        },
    }
}

/// Fits an SVR on `(e_c, e_w) → target`, standardizing both features.
pub fn fit_svr(samples: &[StackSample], params: &SvrParams) -> Result<SvrStackModel> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            available: samples.len(),
        });
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C = {}", params.c)));
    }
    if !(params.eps >= 0.0 && params.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {}", params.eps)));
    }
    if let Kernel::Gaussian { gamma } = params.kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma}")));
        }
    }
    let sc = [
        scaling(samples.iter().map(|s| s.e_c)),
        scaling(samples.iter().map(|s| s.e_w)),
    ];
    let x: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| [sc[0].apply(s.e_c), sc[1].apply(s.e_w)])
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.target).collect();
    let (dual, bias, iterations) = solve_dual(&x, &y, params)?;
    Ok(SvrStackModel {
        kernel: params.kernel,
        c: params.c,
        eps: params.eps,
        dual_coefficients: dual,
        bias,
        support_inputs: x,
        feature_scaling: sc,
        iterations,
    })
}

impl SvrStackModel {
    pub fn predict(&self, e_c: f64, e_w: f64) -> f64 {
        let x = [
            self.feature_scaling[0].apply(e_c),
            self.feature_scaling[1].apply(e_w),
        ];
        self.decision(&x)
    }

    /// Regression function on already-standardized inputs.
    pub fn decision(&self, x: &[f64; 2]) -> f64 {
        self.bias
            + self
                .dual_coefficients
                .iter()
                .zip(&self.support_inputs)
                .filter(|(b, _)| **b != 0.0)
                .map(|(b, s)| b * self.kernel.eval(s, x))
                .sum::<f64>()
    }
}

pub fn predict_svr(model: &SvrStackModel, e_c: f64, e_w: f64) -> f64 {
    model.predict(e_c, e_w)
}

/// SMO on the `2n`-variable dual
/// `min ½ aᵀQa + pᵀa, 0 ≤ a ≤ C, Σ s_t a_t = 0`
/// with `s = (+1…, -1…)`, `p = (ε - y, ε + y)`, `Q_ij = s_i s_j K_ij`.
fn solve_dual(x: &[[f64; 2]], y: &[f64], params: &SvrParams) -> Result<(Vec<f64>, f64, usize)> {
    const TAU: f64 = 1e-12;
    let n = x.len();
    let m = 2 * n;
    let c = params.c;
    let kmat: Vec<Vec<f64>> = x
        .iter()
        .map(|a| x.iter().map(|b| params.kernel.eval(a, b)).collect())
        .collect();
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let kq = |i: usize, j: usize| sign(i) * sign(j) * kmat[i % n][j % n];

    let mut alpha = vec![0.0; m];
    let mut grad: Vec<f64> = (0..m)
        .map(|t| {
            if t < n {
                params.eps - y[t]
            } else {
                params.eps + y[t - n]
            }
        })
        .collect();

    let in_up = |t: usize, a: f64| if sign(t) > 0.0 { a < c } else { a > 0.0 };
    let in_low = |t: usize, a: f64| if sign(t) > 0.0 { a > 0.0 } else { a < c };

    let mut iter = 0;
    loop {
        // first index: maximal violation from the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..m {
            if in_up(t, alpha[t]) {
                let v = -sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // second index: best second-order decrease from the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..m {
            if in_low(t, alpha[t]) {
                let v = sign(t) * grad[t];
                if v > gmax2 {
                    gmax2 = v;
                }
                if i_sel != usize::MAX {
                    let b = gmax + v;
                    if b > 0.0 {
                        let a = kq(i_sel, i_sel) + kq(t, t)
                            - 2.0 * sign(i_sel) * sign(t) * kq(i_sel, t);
                        let gain = -(b * b) / if a > 0.0 { a } else { TAU };
                        if gain <= best_gain {
                            best_gain = gain;
                            j_sel = t;
                        }
                    }
                }
            }
        }
        if gmax + gmax2 < params.tol || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        if iter >= params.max_iter {
            return Err(Error::NonConvergence {
                what: "SVR SMO",
                iterations: iter,
            });
        }
        iter += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = kq(i, i);
        let qjj = kq(j, j);
        let qij = kq(i, j);
        if sign(i) != sign(j) {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += kq(t, i) * di + kq(t, j) * dj;
        }
    }

    // bias from the free variables, or the middle of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..m {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_n += 1;
            free_sum += yg;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };
    let dual: Vec<f64> = (0..n).map(|t| alpha[t] - alpha[t + n]).collect();
    Ok((dual, -rho, iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ts::MonthStamp;

    fn samples(points: &[(f64, f64, f64)]) -> Vec<StackSample> {
        let m0 = MonthStamp::new(2013, 1).unwrap();
        points
            .iter()
            .enumerate()
            .map(|(k, &(e_c, e_w, target))| StackSample {
                e_c,
                e_w,
                target,
                month: m0.add_months(k as i64),
            })
            .collect()
    }

    #[test]
    fn constant_target_inside_tube() {
        let s = samples(&[
            (1.0, 5.0, 7.0),
            (2.0, 3.0, 7.0),
            (4.0, 1.0, 7.0),
            (3.0, 8.0, 7.0),
        ]);
        for params in [SvrParams::linear(), SvrParams::gaussian(0.25)] {
            let m = fit_svr(&s, &params).unwrap();
            assert!(m.dual_coefficients.iter().all(|b| *b == 0.0));
            assert!((m.bias - 7.0).abs() < 1e-12);
            assert!((m.predict(100.0, -3.0) - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_tube_gives_mid_range() {
        let s = samples(&[
            (1.0, 5.0, 3.0),
            (2.0, 3.0, 4.5),
            (4.0, 1.0, 3.8),
            (3.0, 8.0, 5.0),
        ]);
        let params = SvrParams {
            eps: 1.5,
            ..SvrParams::linear()
        };
        let m = fit_svr(&s, &params).unwrap();
        assert!(m.dual_coefficients.iter().all(|b| *b == 0.0));
        assert!((m.bias - 4.0).abs() < 1e-12);
        for x in &s {
            let r = (x.target - m.predict(x.e_c, x.e_w)).abs();
            assert!(r <= params.eps);
        }
    }

    #[test]
    fn kernel_values() {
        let g = Kernel::Gaussian { gamma: 0.5 };
        assert!((g.eval(&[0.0, 0.0], &[1.0, 1.0]) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(g.eval(&[0.3, -2.0], &[0.3, -2.0]), 1.0);
        assert_eq!(Kernel::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
    }

    #[test]
    fn prediction_from_hand_built_models() {
        let flat = SvrStackModel {
            kernel: Kernel::Linear,
            c: 1.0,
            eps: 0.1,
            dual_coefficients: vec![0.0, 0.0],
            bias: 7.0,
            support_inputs: vec![[1.0, 1.0], [2.0, 0.0]],
            feature_scaling: [Standardization {
                mean: 0.0,
                scale: 1.0,
            }; 2],
            iterations: 0,
        };
        assert_eq!(predict_svr(&flat, 3.0, -9.0), 7.0);
        let spike = SvrStackModel {
            kernel: Kernel::Gaussian { gamma: 3.7 },
            dual_coefficients: vec![1.0],
            bias: 0.0,
            support_inputs: vec![[0.4, -1.2]],
            ..flat
        };
        assert!((spike.decision(&[0.4, -1.2]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constraints_hold() {
        let pts: Vec<(f64, f64, f64)> = (0..15)
            .map(|k| {
                let t = k as f64;
                let c = 20.0 + 6.0 * (t * 0.8).sin();
                let w = 22.0 + 4.0 * (t * 0.3).cos();
                (c, w, 0.6 * c + 0.5 * w + 3.0 * (t * 2.1).sin())
            })
            .collect();
        for params in [
            SvrParams {
                c: 1.0,
                ..SvrParams::linear()
            },
            SvrParams {
                c: 10.0,
                eps: 0.5,
                ..SvrParams::gaussian(0.25)
            },
        ] {
            let m = fit_svr(&samples(&pts), &params).unwrap();
            let sum: f64 = m.dual_coefficients.iter().sum();
            assert!(sum.abs() < 1e-8);
            assert!(m
                .dual_coefficients
                .iter()
                .all(|b| b.abs() <= params.c + 1e-12));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = samples(&[(1.0, 2.0, 3.0), (2.0, 1.0, 4.0)]);
        assert!(fit_svr(
            &s,
            &SvrParams {
                c: 0.0,
                ..SvrParams::linear()
            }
        )
        .is_err());
        assert!(fit_svr(
            &s,
            &SvrParams {
                eps: -1.0,
                ..SvrParams::linear()
            }
        )
        .is_err());
        assert!(fit_svr(&s, &SvrParams::gaussian(0.0)).is_err());
        assert!(matches!(
            fit_svr(&s[..1], &SvrParams::linear()),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
