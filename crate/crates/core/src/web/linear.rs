//! Linear models over query frequencies: minimum-norm OLS and LASSO.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::panel::{design, QueryPanel};
use crate::error::{Error, Result};
use crate::linalg::min_norm_least_squares;
use crate::ts::TimeSeries;

/// Coordinate-change tolerance for coordinate descent.
pub const LASSO_TOL: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 100_000;
const POLISH_EVERY: usize = 10;
/// Number of lambdas on the cross-validation grid.
pub const CV_GRID_LEN: usize = 50;
/// Smallest grid lambda as a fraction of `lambda_max`.
pub const CV_GRID_RATIO: f64 = 1e-3;

/// Per-feature affine transform `(x - mean) / scale`. A zero scale marks a
/// constant feature, which contributes nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn apply(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            (x - self.mean) / self.scale
        }
    }
}

/// `Ê(t) = mu + Σ alphas[i] · standardization[i](Q_i(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebLinearModel {
    pub mu: f64,
    pub alphas: Vec<f64>,
    pub standardization: Vec<Standardization>,
    /// Penalty used for LASSO fits; `None` for OLS.
    pub lambda: Option<f64>,
}

impl WebLinearModel {
    pub fn n_features(&self) -> usize {
        self.alphas.len()
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alphas.len(),
                got: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    pub(crate) fn predict_unchecked(&self, row: &[f64]) -> f64 {
        self.mu
            + self
                .alphas
                .iter()
                .zip(&self.standardization)
                .zip(row)
                .map(|((a, s), x)| a * s.apply(*x))
                .sum::<f64>()
    }

    pub fn nonzero_count(&self) -> usize {
        self.alphas.iter().filter(|a| **a != 0.0).count()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ordinary least squares on the raw (centered) frequencies. When the
/// system is underdetermined the coefficient vector of minimum Euclidean
/// norm is returned; the intercept is not part of that norm.
pub fn fit_web_ols(q: &QueryPanel, e: &TimeSeries) -> Result<WebLinearModel> {
    let (rows, y) = design(q, e)?;
    fit_ols_rows(&rows, &y)
}

pub(crate) fn fit_ols_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<WebLinearModel> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            available: rows.len(),
        });
    }
    let n = rows[0].len();
    let t = rows.len();
    let means: Vec<f64> = (0..n)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / t as f64)
        .collect();
    let y_mean = mean(y);
    let x = DMatrix::from_fn(t, n, |i, j| rows[i][j] - means[j]);
    let yc = DVector::from_iterator(t, y.iter().map(|v| v - y_mean));
    let alphas = min_norm_least_squares(&x, &yc)?;
    Ok(WebLinearModel {
        mu: y_mean,
        alphas: alphas.iter().copied().collect(),
        standardization: means
            .iter()
            .map(|&m| Standardization {
                mean: m,
                scale: 1.0,
            })
            .collect(),
        lambda: None,
    })
}

/// Standardized columns (zero mean, unit population variance) and the
/// transforms that produced them. Constant columns come back all zero.
pub(crate) fn standardize(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Standardization>) {
    let t = rows.len() as f64;
    let n = rows.first().map_or(0, Vec::len);
    let mut cols = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    for j in 0..n {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = mean(&col);
        let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / t;
        let sd = var.sqrt();
        // relative threshold so that rounding noise on a constant column
        // is not blown up to unit variance
        let scale = if sd <= 1e-12 * (1.0 + m.abs()) {
            0.0
        } else {
            sd
        };
        let s = Standardization { mean: m, scale };
        cols.push(col.iter().map(|x| s.apply(*x)).collect());
        stds.push(s);
    }
    (cols, stds)
}

fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Second moments of standardized columns and centered target, shared by
/// every solve on the same rows.
pub(crate) struct Gram {
    p: usize,
    rows: usize,
    /// Row-major `p × p` matrix of `x_jᵀ x_k / T`.
    g: Vec<f64>,
    /// `x_jᵀ y / T`.
    c: Vec<f64>,
}

impl Gram {
    pub(crate) fn new(cols: &[Vec<f64>], yc: &[f64]) -> Self {
        let p = cols.len();
        let t = yc.len() as f64;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / t;
        let mut g = vec![0.0; p * p];
        for j in 0..p {
            for k in j..p {
                let v = dot(&cols[j], &cols[k]);
                g[j * p + k] = v;
                g[k * p + j] = v;
            }
        }
        let c = cols.iter().map(|col| dot(col, yc)).collect();
        Self {
            p,
            rows: yc.len(),
            g,
            c,
        }
    }

    fn at(&self, j: usize, k: usize) -> f64 {
        self.g[j * self.p + k]
    }

    /// Smallest penalty at which every coefficient is zero.
    pub(crate) fn lambda_max(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Smallest penalty at which every coefficient is zero.
pub(crate) fn lambda_max(cols: &[Vec<f64>], yc: &[f64]) -> f64 {
    Gram::new(cols, yc).lambda_max()
}

/// One pass of coordinate updates over `coords`; returns the largest change.
/// `fitted` holds `G α` and is kept in step with `alphas`.
fn sweep(
    gram: &Gram,
    lambda: f64,
    coords: &[usize],
    alphas: &mut [f64],
    fitted: &mut [f64],
) -> f64 {
    let mut max_change: f64 = 0.0;
    for &j in coords {
        let gjj = gram.at(j, j);
        let old = alphas[j];
        let rho = gram.c[j] - fitted[j] + gjj * old;
        let new = soft_threshold(rho, lambda) / gjj;
        if new != old {
            let delta = new - old;
            for (k, f) in fitted.iter_mut().enumerate() {
                *f += gram.at(k, j) * delta;
            }
            alphas[j] = new;
            max_change = max_change.max(delta.abs());
        }
    }
    max_change
}

/// Cyclic coordinate descent starting from (and updating) `alphas`.
///
/// Passes alternate between the current support and the full coordinate
/// set; the solve ends when a full pass moves no coefficient by more than
/// the tolerance. Returns the number of passes.
fn coordinate_descent(gram: &Gram, lambda: f64, alphas: &mut [f64]) -> Result<usize> {
    let p = gram.p;
    // all-zero (constant) columns keep a zero coefficient
    let usable: Vec<usize> = (0..p).filter(|&j| gram.at(j, j) > 0.0).collect();
    for j in 0..p {
        if gram.at(j, j) <= 0.0 {
            alphas[j] = 0.0;
        }
    }
    let mut fitted: Vec<f64> = (0..p)
        .map(|k| usable.iter().map(|&j| gram.at(k, j) * alphas[j]).sum())
        .collect();
    let mut passes = 0;
    while passes < LASSO_MAX_SWEEPS {
        passes += 1;
        if sweep(gram, lambda, &usable, alphas, &mut fitted) < LASSO_TOL {
            return Ok(passes);
        }
        let support: Vec<usize> = usable
            .iter()
            .copied()
            .filter(|&j| alphas[j] != 0.0)
            .collect();
        let mut inner = 0;
        while passes < LASSO_MAX_SWEEPS {
            passes += 1;
            inner += 1;
            if sweep(gram, lambda, &support, alphas, &mut fitted) < LASSO_TOL {
                break;
            }
            if inner % POLISH_EVERY == 0 && polish(gram, lambda, &support, alphas) {
                for (k, f) in fitted.iter_mut().enumerate() {
                    *f = usable.iter().map(|&j| gram.at(k, j) * alphas[j]).sum();
                }
                break;
            }
        }
    }
    Err(Error::NonConvergence {
        what: "LASSO coordinate descent",
        iterations: LASSO_MAX_SWEEPS,
    })
}

/// Moves toward the exact minimizer on `support` with the current signs.
///
/// Correlated columns make coordinate descent crawl once the support has
/// settled; one linear solve finishes the job. On the face of the current
/// sign pattern the objective is `½ αᵀGα - bᵀα` with `b = c - λ·sign(α)`.
/// If `G` is singular and `b` has a component in its null space, the
/// objective falls without bound along that component, so the step follows
/// it until a coefficient reaches zero. Otherwise the step heads for the
/// nearest minimizer and stops early if a coefficient would change sign.
/// Either way the objective does not increase. Returns false when nothing
/// moved.
fn polish(gram: &Gram, lambda: f64, support: &[usize], alphas: &mut [f64]) -> bool {
    let support: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&j| alphas[j] != 0.0)
        .collect();
    let k = support.len();
    if k == 0 {
        return false;
    }
    let g = DMatrix::from_fn(k, k, |r, c| gram.at(support[r], support[c]));
    let current = DVector::from_fn(k, |r, _| alphas[support[r]]);
    let b = DVector::from_fn(k, |r, _| {
        gram.c[support[r]] - lambda * alphas[support[r]].signum()
    });
    let resid = &b - &g * &current;

    let chol = if k + 1 < gram.rows {
        g.clone().cholesky()
    } else {
        None
    };
    let (direction, max_step) = match chol {
        Some(chol) => (chol.solve(&resid), 1.0),
        None => {
            let eig = g.symmetric_eigen();
            let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = 1e-10 * top.max(f64::MIN_POSITIVE);
            let mut newton = DVector::zeros(k);
            let mut null = DVector::zeros(k);
            for (i, &ev) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(i);
                if ev > tol {
                    newton += v * (v.dot(&resid) / ev);
                } else {
                    null += v * v.dot(&b);
                }
            }
            if null.norm() > 1e-9 * (1.0 + b.norm()) {
                (null, f64::INFINITY)
            } else {
                (newton, 1.0)
            }
        }
    };
    if direction.iter().any(|v| !v.is_finite()) {
        return false;
    }

    // largest step up to `max_step` that keeps every sign
    let mut step = max_step;
    let mut blocking = None;
    for (r, &j) in support.iter().enumerate() {
        let d = direction[r];
        if d != 0.0 && d.signum() != alphas[j].signum() {
            let tau = -alphas[j] / d;
            if tau < step {
                step = tau;
                blocking = Some(j);
            }
        }
    }
    if !step.is_finite() || step <= 0.0 {
        return false;
    }
    for (r, &j) in support.iter().enumerate() {
        alphas[j] += step * direction[r];
    }
    if let Some(j) = blocking {
        alphas[j] = 0.0;
    }
    true
}

/// LASSO on standardized features:
/// `(1/2T) Σ (E - mu - Σ alpha_i Q̃_i)² + lambda Σ |alpha_i|`, with the
/// intercept left unpenalized.
pub fn fit_lasso(q: &QueryPanel, e: &TimeSeries, lambda: f64) -> Result<WebLinearModel> {
    let (rows, y) = design(q, e)?;
    fit_lasso_rows(&rows, &y, lambda)
}

pub(crate) fn fit_lasso_rows(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<WebLinearModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    if rows.is_empty() {
        return Err(Error::TooFewRows {
            needed: 1,
            available: 0,
        });
    }
    let (cols, standardization) = standardize(rows);
    let y_mean = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut alphas = vec![0.0; cols.len()];
    coordinate_descent(&Gram::new(&cols, &yc), lambda, &mut alphas)?;
    Ok(WebLinearModel {
        mu: y_mean,
        alphas,
        standardization,
        lambda: Some(lambda),
    })
}

/// Descending log-spaced grid from `lambda_max` to `lambda_max · 1e-3`.
pub fn lambda_grid(lambda_max: f64) -> Vec<f64> {
    let steps = (CV_GRID_LEN - 1) as f64;
    (0..CV_GRID_LEN)
        .map(|k| lambda_max * CV_GRID_RATIO.powf(k as f64 / steps))
        .collect()
}

/// Chooses lambda by `k`-fold cross-validation over contiguous time blocks.
pub fn select_lambda_cv(q: &QueryPanel, e: &TimeSeries, k: usize) -> Result<f64> {
    let (rows, y) = design(q, e)?;
    select_lambda_rows(&rows, &y, k)
}

/// Contiguous fold boundaries; earlier folds take the remainder rows.
pub(crate) fn fold_bounds(t: usize, k: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (t / k, t % k);
    let mut out = Vec::with_capacity(k);
    let mut lo = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push((lo, lo + len));
        lo += len;
    }
    out
}

pub(crate) fn select_lambda_rows(rows: &[Vec<f64>], y: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if rows.len() < k {
        return Err(Error::TooFewRows {
            needed: k,
            available: rows.len(),
        });
    }
    let (cols, _) = standardize(rows);
    let y_mean = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let lmax = lambda_max(&cols, &yc);
    if lmax == 0.0 {
        return Ok(0.0);
    }
    let grid = lambda_grid(lmax);
    let mut sse = vec![0.0; grid.len()];

    for (lo, hi) in fold_bounds(rows.len(), k) {
        let train_rows: Vec<Vec<f64>> = rows[..lo].iter().chain(&rows[hi..]).cloned().collect();
        let train_y: Vec<f64> = y[..lo].iter().chain(&y[hi..]).copied().collect();
        let (tcols, stds) = standardize(&train_rows);
        let tm = mean(&train_y);
        let tyc: Vec<f64> = train_y.iter().map(|v| v - tm).collect();
        let gram = Gram::new(&tcols, &tyc);
        let mut alphas = vec![0.0; tcols.len()];
        for (g, &lambda) in grid.iter().enumerate() {
            // warm start along the descending path
            coordinate_descent(&gram, lambda, &mut alphas)?;
            let model = WebLinearModel {
                mu: tm,
                alphas: alphas.clone(),
                standardization: stds.clone(),
                lambda: Some(lambda),
            };
            sse[g] += rows[lo..hi]
                .iter()
                .zip(&y[lo..hi])
                .map(|(r, v)| (model.predict_unchecked(r) - v).powi(2))
                .sum::<f64>();
        }
    }

    let mut best = 0;
    for g in 1..grid.len() {
        if sse[g] < sse[best] {
            best = g;
        }
    }
    Ok(grid[best])
}

/// LASSO with lambda chosen by cross-validation.
pub fn fit_lasso_cv(q: &QueryPanel, e: &TimeSeries, k: usize) -> Result<WebLinearModel> {
    let (rows, y) = design(q, e)?;
    fit_lasso_cv_rows(&rows, &y, k)
}

pub(crate) fn fit_lasso_cv_rows(rows: &[Vec<f64>], y: &[f64], k: usize) -> Result<WebLinearModel> {
    let lambda = select_lambda_rows(rows, y, k)?;
    fit_lasso_rows(rows, y, lambda)
}
