//! Least-squares helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal jitter added to the normal equations of a rank-deficient design.
pub const RIDGE_JITTER: f64 = 1e-8;

/// Condition-number threshold above which a design counts as singular.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LstsqSolution {
    pub coef: DVector<f64>,
    /// True when the design was rank deficient and the ridge fallback ran.
    pub ridge: bool,
}

/// Ordinary least squares `min ||X b - y||²`.
///
/// A rank-deficient `X` either fails with [`Error::SingularDesign`] or,
/// with `ridge_fallback`, is solved from `(XᵀX + jitter·I) b = Xᵀy`.
pub(crate) fn least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    ridge_fallback: bool,
) -> Result<LstsqSolution> {
    let cols = x.ncols();
    let full_rank = x.nrows() >= cols && {
        let sv = x.clone().singular_values();
        let max = sv.max();
        max > 0.0 && sv.min() > max * RANK_RTOL
    };
    if full_rank {
        let qr = x.clone().qr();
        let qty = qr.q().transpose() * y;
        let coef = qr
            .r()
            .solve_upper_triangular(&qty)
            .ok_or(Error::SingularDesign)?;
        return Ok(LstsqSolution { coef, ridge: false });
    }
    if !ridge_fallback {
        return Err(Error::SingularDesign);
    }
    let mut xtx = x.transpose() * x;
    for i in 0..cols {
        xtx[(i, i)] += RIDGE_JITTER;
    }
    let xty = x.transpose() * y;
    let coef = xtx
        .cholesky()
        .map(|c| c.solve(&xty))
        .ok_or(Error::SingularDesign)?;
    Ok(LstsqSolution { coef, ridge: true })
}

/// Minimum-norm least-squares solution via the SVD pseudo-inverse.
pub(crate) fn min_norm_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = x.clone().svd(true, true);
    let max = svd.singular_values.max();
    if max == 0.0 {
        return Ok(DVector::zeros(x.ncols()));
    }
    let tol = max * RANK_RTOL * x.nrows().max(x.ncols()) as f64;
    svd.solve(y, tol)
        .map_err(|e| Error::InvalidValue(e.to_string()))
}
