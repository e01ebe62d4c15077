//! Post-announcement market outcomes: drift (CAR, BHAR over trading days
//! 2..=60) and the uncertainty proxies over days 1..=30.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PanelError;
use crate::date::Date;
use crate::math::{ln, mean, sample_sd};

/// One trading day for one firm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyObs {
    pub date: Date,
    pub ret: f64,
    pub market_ret: f64,
    pub bid: Option<f64>,
    pub ask: Option<f64>,
    pub volume: Option<f64>,
}

pub const DRIFT_WINDOW: (usize, usize) = (2, 60);
pub const PROXY_WINDOW: (usize, usize) = (1, 30);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub car: f64,
    pub bhar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyProxies {
    pub ret_sd: f64,
    /// Log of mean daily volume; `None` when volume is missing or zero.
    pub volume: Option<f64>,
    pub volume_raw: Option<f64>,
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcomes {
    pub car_2_60: Option<f64>,
    pub bhar_2_60: Option<f64>,
    pub ret_sd: Option<f64>,
    pub volume: Option<f64>,
    pub volume_raw: Option<f64>,
    pub spread: Option<f64>,
}

/// Trading days `from..=to` relative to day 0, the first trading day on or
/// after the announcement. `series` must be sorted by date.
fn window(series: &[DailyObs], announcement: Date, (from, to): (usize, usize)) -> Result<&[DailyObs], PanelError> {
    let day0 = series.partition_point(|o| o.date < announcement);
    let needed = to - from + 1;
    let start = day0 + from;
    let available = series.len().saturating_sub(start).min(needed);
    if available < needed {
        return Err(PanelError::InsufficientWindow { needed, available });
    }
    Ok(&series[start..=day0 + to])
}

pub fn drift(series: &[DailyObs], announcement: Date) -> Result<Drift, PanelError> {
    let w = window(series, announcement, DRIFT_WINDOW)?;
    let car = w.iter().map(|o| o.ret - o.market_ret).sum();
    let firm: f64 = w.iter().map(|o| 1.0 + o.ret).product();
    let market: f64 = w.iter().map(|o| 1.0 + o.market_ret).product();
    Ok(Drift { car, bhar: firm - market })
}

pub fn uncertainty_proxies(series: &[DailyObs], announcement: Date) -> Result<UncertaintyProxies, PanelError> {
    let w = window(series, announcement, PROXY_WINDOW)?;
    let rets: Vec<f64> = w.iter().map(|o| o.ret).collect();
    let volumes: Vec<f64> = w.iter().filter_map(|o| o.volume).filter(|v| v.is_finite()).collect();
    let volume_raw = (!volumes.is_empty()).then(|| mean(&volumes));
    let spreads: Vec<f64> = w
        .iter()
        .filter_map(|o| {
            let (bid, ask) = (o.bid?, o.ask?);
            let mid = (bid + ask) / 2.0;
            (mid > 0.0).then(|| (ask - bid) / mid)
        })
        .collect();
    Ok(UncertaintyProxies {
        ret_sd: sample_sd(&rets),
        volume: volume_raw.filter(|v| *v > 0.0).map(ln),
        volume_raw,
        spread: (!spreads.is_empty()).then(|| mean(&spreads)),
    })
}

/// Both outcome sets; a window that is too short leaves its fields `None`.
pub fn market_outcomes(series: &[DailyObs], announcement: Date) -> MarketOutcomes {
    let mut out = MarketOutcomes::default();
    if let Ok(d) = drift(series, announcement) {
        out.car_2_60 = Some(d.car);
        out.bhar_2_60 = Some(d.bhar);
    }
    if let Ok(p) = uncertainty_proxies(series, announcement) {
        out.ret_sd = Some(p.ret_sd);
        out.volume = p.volume;
        out.volume_raw = p.volume_raw;
        out.spread = p.spread;
    }
    out
}
