use nonanswer_core::elicitor::validate_reply;
use nonanswer_core::lexicon::{tone, WordLists};
use nonanswer_core::panel::forecast::{forecast_features, ForecastInputs};
use nonanswer_core::panel::winsor::winsorize;
use nonanswer_core::Date;
use proptest::prelude::*;

fn inputs(consensus: f64, actual: f64, price: f64, n: u32, forecasts: Vec<f64>) -> ForecastInputs {
    ForecastInputs {
        firm_id: "F".into(),
        fiscal_quarter: "2021Q2".parse().unwrap(),
        consensus_mean_eps: consensus,
        analyst_forecasts: forecasts,
        forecast_sd: None,
        actual_eps: actual,
        analyst_following: n,
        prior_close: price,
        announcement_date: Date::new(2021, 7, 20).unwrap(),
    }
}

proptest! {
    #[test]
    fn winsorize_is_monotone(v in prop::collection::vec(-1e6f64..1e6, 2..200)) {
        let w = winsorize(&v, 0.01, 0.99);
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] <= v[j] {
                    prop_assert!(w[i] <= w[j]);
                }
            }
        }
    }

    // Interpolated percentiles make a second pass a no-op only when both
    // cut points fall on order statistics, i.e. (n - 1)·p is an integer.
    #[test]
    fn winsorize_idempotent_on_exact_ranks(v in prop::collection::vec(-1e6f64..1e6, 101..=101)) {
        let w = winsorize(&v, 0.01, 0.99);
        prop_assert_eq!(winsorize(&w, 0.01, 0.99), w);
    }

    #[test]
    fn uncertainty_identity(
        consensus in -5.0f64..5.0,
        actual in -5.0f64..5.0,
        price in 0.5f64..500.0,
        forecasts in prop::collection::vec(-5.0f64..5.0, 2..30),
    ) {
        let n = forecasts.len() as u32;
        let f = forecast_features(&inputs(consensus, actual, price, n, forecasts)).unwrap();
        let (d, e, u) = (f.dispersion.unwrap(), f.error.unwrap(), f.uncertainty.unwrap());
        prop_assert!((u - ((1.0 - 1.0 / f64::from(n)) * d + e)).abs() < 1e-12);
        let single = forecast_features(&inputs(consensus, actual, price, 1, vec![])).unwrap();
        prop_assert_eq!(single.uncertainty, single.error);
    }

    #[test]
    fn error_and_squared_error_share_zeros(consensus in -3i32..3, actual in -3i32..3, price in 1.0f64..50.0) {
        let f = forecast_features(&inputs(f64::from(consensus) / 10.0, f64::from(actual) / 10.0, price, 1, vec![])).unwrap();
        prop_assert_eq!(f.error == Some(0.0), f.squ_error == Some(0.0));
    }

    #[test]
    fn tone_is_bounded(text in "[a-z ]{0,200}") {
        let l = WordLists::parse("good\ngreat\nup\n", "bad\nweak\ndown\n", "may\n", "will\n").unwrap();
        let t = tone(&text, &l);
        prop_assert!((-1.0..=1.0).contains(&t));
    }

    #[test]
    fn reply_validation_never_panics(raw in ".{0,300}") {
        let a = validate_reply(&raw);
        if let Some(n) = a.nor_count.count() {
            prop_assert!(n <= 3);
            prop_assert!(a.category.len() <= n as usize);
        }
    }
}
