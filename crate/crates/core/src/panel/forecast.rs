//! Analyst forecast features: consensus error, dispersion, overall
//! uncertainty, their squared-error variants and the individual-analyst rows.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PanelError;
use crate::date::{Date, Quarter};
use crate::math::{ln1p, sample_sd};

/// Post-call I/B/E/S summary for one firm-quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastInputs {
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub consensus_mean_eps: f64,
    /// Individual forecasts behind the consensus, when the detail file is
    /// supplied.
    pub analyst_forecasts: Vec<f64>,
    /// Standard deviation reported by the summary; used when fewer than two
    /// individual forecasts are available.
    pub forecast_sd: Option<f64>,
    pub actual_eps: f64,
    pub analyst_following: u32,
    /// Closing price of the previous fiscal quarter.
    pub prior_close: f64,
    pub announcement_date: Date,
}

impl ForecastInputs {
    fn price(&self) -> Result<f64, PanelError> {
        if self.prior_close > 0.0 && self.prior_close.is_finite() {
            Ok(self.prior_close)
        } else {
            Err(PanelError::MissingPrice)
        }
    }
}

pub fn forecast_error(f: &ForecastInputs) -> Result<f64, PanelError> {
    Ok((f.consensus_mean_eps - f.actual_eps).abs() / f.price()?)
}

pub fn forecast_dispersion(f: &ForecastInputs) -> Result<f64, PanelError> {
    let price = f.price()?;
    if f.analyst_forecasts.len() >= 2 {
        return Ok(sample_sd(&f.analyst_forecasts) / price);
    }
    match f.forecast_sd {
        Some(sd) if f.analyst_following >= 2 && sd.is_finite() && sd >= 0.0 => Ok(sd / price),
        _ => Err(PanelError::TooFewForecasts),
    }
}

/// `(1 - 1/N)·dispersion + error`. With a single analyst the first term
/// vanishes and no dispersion is needed.
pub fn forecast_uncertainty(f: &ForecastInputs) -> Result<f64, PanelError> {
    let error = forecast_error(f)?;
    uncertainty_from(f.analyst_following, || forecast_dispersion(f), error)
}

fn uncertainty_from(
    following: u32,
    dispersion: impl FnOnce() -> Result<f64, PanelError>,
    error: f64,
) -> Result<f64, PanelError> {
    match following {
        0 => Err(PanelError::MissingField("analyst_following")),
        1 => Ok(error),
        n => Ok((1.0 - 1.0 / f64::from(n)) * dispersion()? + error),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquaredVariants {
    pub squ_error: f64,
    pub squ_uncertainty: f64,
}

pub fn squared_variants(f: &ForecastInputs) -> Result<SquaredVariants, PanelError> {
    let diff = f.consensus_mean_eps - f.actual_eps;
    let squ_error = diff * diff / f.price()?;
    Ok(SquaredVariants {
        squ_error,
        squ_uncertainty: uncertainty_from(f.analyst_following, || forecast_dispersion(f), squ_error)?,
    })
}

/// All firm-level forecast features; a feature that cannot be computed is
/// `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastFeatures {
    pub error: Option<f64>,
    pub dispersion: Option<f64>,
    pub uncertainty: Option<f64>,
    pub squ_error: Option<f64>,
    pub squ_uncertainty: Option<f64>,
}

pub fn forecast_features(f: &ForecastInputs) -> Result<ForecastFeatures, PanelError> {
    let error = forecast_error(f)?;
    let sq = squared_variants(f).ok();
    Ok(ForecastFeatures {
        error: Some(error),
        dispersion: forecast_dispersion(f).ok(),
        uncertainty: forecast_uncertainty(f).ok(),
        squ_error: sq.map(|s| s.squ_error),
        squ_uncertainty: sq.map(|s| s.squ_uncertainty),
    })
}

/// One dated EPS estimate from the detail file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailForecast {
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub analyst_id: String,
    pub forecast_date: Date,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualRow {
    pub analyst_id: String,
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub error_individual: f64,
    pub time_individual: f64,
    pub nor_firm: Option<f64>,
}

/// Days after the announcement during which revisions are collected.
pub const INDIVIDUAL_WINDOW_DAYS: i64 = 30;

/// Latest estimate per analyst issued 0..=30 days after the announcement.
/// Ties on the date keep the later entry. Sorted by analyst id.
pub fn latest_post_call(detail: &[DetailForecast], announcement: Date) -> Vec<(&DetailForecast, i64)> {
    let mut latest: BTreeMap<&str, (&DetailForecast, i64)> = BTreeMap::new();
    for d in detail {
        let gap = d.forecast_date.days_after(announcement);
        if !(0..=INDIVIDUAL_WINDOW_DAYS).contains(&gap) {
            continue;
        }
        match latest.get(d.analyst_id.as_str()) {
            Some((_, g)) if *g > gap => {}
            _ => {
                latest.insert(&d.analyst_id, (d, gap));
            }
        }
    }
    latest.into_values().collect()
}

pub fn individual_features(f: &ForecastInputs, detail: &[DetailForecast]) -> Result<Vec<IndividualRow>, PanelError> {
    let price = f.price()?;
    Ok(latest_post_call(detail, f.announcement_date)
        .into_iter()
        .map(|(d, gap)| IndividualRow {
            analyst_id: d.analyst_id.clone(),
            firm_id: f.firm_id.clone(),
            fiscal_quarter: f.fiscal_quarter,
            error_individual: (d.eps - f.actual_eps).abs() / price,
            time_individual: ln1p(gap as f64),
            nor_firm: None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn inputs(consensus: f64, actual: f64, price: f64) -> ForecastInputs {
        ForecastInputs {
            firm_id: "F".into(),
            fiscal_quarter: "2020Q1".parse().unwrap(),
            consensus_mean_eps: consensus,
            analyst_forecasts: Vec::new(),
            forecast_sd: None,
            actual_eps: actual,
            analyst_following: 1,
            prior_close: price,
            announcement_date: Date::new(2020, 4, 20).unwrap(),
        }
    }

    #[test]
    fn error_cases() {
        assert_eq!(forecast_error(&inputs(1.0, 1.0, 20.0)).unwrap(), 0.0);
        assert!((forecast_error(&inputs(2.10, 2.00, 50.0)).unwrap() - 0.002).abs() < 1e-15);
        assert!((forecast_error(&inputs(1.90, 2.00, 50.0)).unwrap() - 0.002).abs() < 1e-15);
        assert_eq!(forecast_error(&inputs(1.0, 1.0, 0.0)), Err(PanelError::MissingPrice));
    }

    #[test]
    fn dispersion_cases() {
        let mut f = inputs(1.5, 1.5, 10.0);
        f.analyst_forecasts = vec![1.0, 2.0];
        f.analyst_following = 2;
        assert!((forecast_dispersion(&f).unwrap() - libm::sqrt(0.5) / 10.0).abs() < 1e-15);
        f.analyst_forecasts = vec![3.0; 4];
        assert_eq!(forecast_dispersion(&f).unwrap(), 0.0);
        f.analyst_forecasts = vec![1.0];
        assert_eq!(forecast_dispersion(&f), Err(PanelError::TooFewForecasts));
        f.forecast_sd = Some(0.2);
        assert!((forecast_dispersion(&f).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_cases() {
        let f = inputs(1.1, 1.0, 10.0);
        assert_eq!(forecast_uncertainty(&f).unwrap(), forecast_error(&f).unwrap());
        let mut f = inputs(1.1, 1.0, 10.0);
        f.analyst_following = 10;
        f.forecast_sd = Some(1.0);
        assert!((forecast_uncertainty(&f).unwrap() - 0.10).abs() < 1e-15);
    }

    #[test]
    fn squared_cases() {
        let mut f = inputs(1.2, 1.0, 10.0);
        f.analyst_following = 2;
        f.forecast_sd = Some(1.0);
        let s = squared_variants(&f).unwrap();
        assert!((s.squ_error - 0.004).abs() < 1e-15);
        assert!((s.squ_uncertainty - 0.054).abs() < 1e-15);
        assert_eq!(squared_variants(&inputs(1.0, 1.0, 10.0)).unwrap().squ_error, 0.0);
    }

    #[test]
    fn individual_window() {
        let f = inputs(1.0, 1.0, 10.0);
        let ann = f.announcement_date;
        let d = |a: &str, days: i64, eps: f64| DetailForecast {
            firm_id: "F".into(),
            fiscal_quarter: f.fiscal_quarter,
            analyst_id: a.into(),
            forecast_date: ann.add_days(days),
            eps,
        };
        let detail = vec![d("A", 0, 1.1), d("B", 3, 1.0), d("B", 14, 1.2), d("C", 31, 2.0), d("D", -1, 2.0)];
        let rows = individual_features(&f, &detail).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].time_individual, 0.0);
        assert!((rows[1].time_individual - libm::log(15.0)).abs() < 1e-15);
        assert!((rows[1].error_individual - 0.02).abs() < 1e-15);
    }
}
