//! Bagged LASSO models over random query subsets.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{fit_lasso_cv_rows, WebLinearModel};
use super::panel::{design, QueryPanel};
use crate::error::{Error, Result};
use crate::ts::TimeSeries;

/// What each bagged member is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaggingMode {
    /// A subset of distinct queries, all training months.
    #[default]
    Queries,
    /// All queries, a bootstrap resample of the training months.
    Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggingConfig {
    /// Number of members; `None` means one per query in the panel.
    pub n_subsets: Option<usize>,
    pub subset_size: usize,
    pub seed: u64,
    pub mode: BaggingMode,
    pub cv_folds: usize,
}

impl Default for BaggingConfig {
    fn default() -> Self {
        Self {
            n_subsets: None,
            subset_size: 10,
            seed: 0,
            mode: BaggingMode::Queries,
            cv_folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagMember {
    /// Panel columns this member sees, ascending.
    pub queries: Vec<usize>,
    pub model: WebLinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub members: Vec<BagMember>,
    pub n_queries: usize,
}

/// Draws the member query subsets: each subset holds `subset_size`
/// distinct queries, subsets are drawn independently.
pub fn draw_subsets(
    n_queries: usize,
    n_subsets: usize,
    subset_size: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if subset_size == 0 || n_queries < subset_size {
        return Err(Error::PanelTooNarrow {
            needed: subset_size.max(1),
            available: n_queries,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_subsets)
        .map(|_| {
            let mut s = sample(&mut rng, n_queries, subset_size).into_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

pub fn fit_bagging(q: &QueryPanel, e: &TimeSeries, cfg: &BaggingConfig) -> Result<BaggedModel> {
    let n = q.n_queries();
    if n < cfg.subset_size || cfg.subset_size == 0 {
        return Err(Error::PanelTooNarrow {
            needed: cfg.subset_size.max(1),
            available: n,
        });
    }
    let (rows, y) = design(q, e)?;
    if rows.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            available: rows.len(),
        });
    }
    let count = cfg.n_subsets.unwrap_or(n);
    if count == 0 {
        return Err(Error::InvalidParameter(
            "bagging needs at least one member".into(),
        ));
    }

    let members = match cfg.mode {
        BaggingMode::Queries => {
            let subsets = draw_subsets(n, count, cfg.subset_size, cfg.seed)?;
            subsets
                .into_par_iter()
                .map(|queries| {
                    let sub: Vec<Vec<f64>> = rows
                        .iter()
                        .map(|r| queries.iter().map(|&i| r[i]).collect())
                        .collect();
                    let model = fit_lasso_cv_rows(&sub, &y, cfg.cv_folds)?;
                    Ok(BagMember { queries, model })
                })
                .collect::<Result<Vec<_>>>()?
        }
        BaggingMode::Rows => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let t = rows.len();
            let resamples: Vec<Vec<usize>> = (0..count)
                .map(|_| {
                    let mut idx: Vec<usize> = (0..t).map(|_| rng.random_range(0..t)).collect();
                    // keep time order inside the resample for the block folds
                    idx.sort_unstable();
                    idx
                })
                .collect();
            resamples
                .into_par_iter()
                .map(|idx| {
                    let sub: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
                    let sy: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    let model = fit_lasso_cv_rows(&sub, &sy, cfg.cv_folds)?;
                    Ok(BagMember {
                        queries: (0..n).collect(),
                        model,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(BaggedModel {
        members,
        n_queries: n,
    })
}

impl BaggedModel {
    /// Each member's prediction for one month of panel frequencies.
    pub fn member_predictions(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_queries {
            return Err(Error::DimensionMismatch {
                expected: self.n_queries,
                got: row.len(),
            });
        }
        Ok(self
            .members
            .iter()
            .map(|m| {
                let sub: Vec<f64> = m.queries.iter().map(|&i| row[i]).collect();
                m.model.predict_unchecked(&sub)
            })
            .collect())
    }

    /// Unweighted mean of the member predictions.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        let preds = self.member_predictions(row)?;
        Ok(mean_prediction(&preds))
    }
}

pub(crate) fn mean_prediction(preds: &[f64]) -> f64 {
    preds.iter().sum::<f64>() / preds.len() as f64
}
