use proptest::prelude::*;
use uptake_core::clinical::{fit_ar_values, fit_arima_values, fit_holt_winters_values, ArimaOrder};

fn arb_series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0f64..1000.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arima_without_differencing_or_ma_is_ar(values in arb_series(30..60), p in 1usize..4) {
        let ar = fit_ar_values(&values, p, true).unwrap();
        let arima = fit_arima_values(&values, ArimaOrder { p, d: 0, q: 0 }).unwrap();
        let scale = 1.0 + ar.mu.abs();
        prop_assert!((ar.mu - arima.mu).abs() < 1e-6 * scale, "mu {} vs {}", ar.mu, arima.mu);
        for (a, b) in ar.betas.iter().zip(&arima.ar_betas) {
            prop_assert!((a - b).abs() < 1e-6, "beta {a} vs {b}");
        }
    }

    #[test]
    fn fitted_models_predict_finite_values(values in arb_series(25..50)) {
        let hw = fit_holt_winters_values(&values, 12).unwrap();
        prop_assert!(hw.predict().is_finite());
        let ar = fit_ar_values(&values, 12, true).unwrap();
        prop_assert!(ar.predict_next(&values).unwrap().is_finite());
        let arima = fit_arima_values(&values, ArimaOrder { p: 1, d: 1, q: 1 }).unwrap();
        prop_assert!(arima.predict_next(&values).unwrap().is_finite());
    }
}
