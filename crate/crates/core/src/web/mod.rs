//! Level-0 forecasters over the query-frequency panel.

pub mod bagging;
pub mod linear;
pub mod panel;
pub mod weighted_majority;

pub use bagging::{draw_subsets, fit_bagging, BagMember, BaggedModel, BaggingConfig, BaggingMode};
pub use linear::{
    fit_lasso, fit_lasso_cv, fit_web_ols, lambda_grid, select_lambda_cv, Standardization,
    WebLinearModel,
};
pub use panel::QueryPanel;
pub use weighted_majority::{wm_init, wm_predict, wm_update, WmState};

/// Mean of the bagged members' predictions.
pub fn predict_bagging(model: &BaggedModel, row: &[f64]) -> crate::Result<f64> {
    model.predict(row)
}
