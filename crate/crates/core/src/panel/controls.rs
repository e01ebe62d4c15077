//! Firm-quarter controls, partition inputs and the quintile/period flags.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::date::Quarter;
use crate::lexicon::TextMetrics;
use crate::math::{ln, ln1p, sample_sd};

/// One Compustat-style fundamentals record. Monetary amounts are in
/// millions, per-share amounts in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fundamentals {
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub total_assets: Option<f64>,
    pub income_before_extra: Option<f64>,
    pub net_income: Option<f64>,
    pub total_debt: Option<f64>,
    /// Millions of shares.
    pub shares_outstanding: Option<f64>,
    pub eps: Option<f64>,
    pub prior_eps: Option<f64>,
    /// Closing price at the end of the previous quarter.
    pub prior_close: Option<f64>,
    /// Average of bid and ask over the last month of the quarter.
    pub quarter_price: Option<f64>,
    pub book_equity: Option<f64>,
    /// Monthly returns over the 12 months before the announcement.
    pub monthly_returns: Vec<f64>,
    /// Number of divisions with distinct two-digit SIC codes.
    pub segments: Option<f64>,
    /// Institutional ownership share of outstanding shares.
    pub inst_ownership: Option<f64>,
    pub intangible_assets: Option<f64>,
    pub rd_expense: Option<f64>,
    pub operating_expense: Option<f64>,
    /// Equal-weighted market return.
    pub wt_ret: Option<f64>,
}

impl Fundamentals {
    /// A record with every field missing.
    pub fn empty(firm_id: &str, fiscal_quarter: Quarter) -> Fundamentals {
        Fundamentals {
            firm_id: firm_id.into(),
            fiscal_quarter,
            total_assets: None,
            income_before_extra: None,
            net_income: None,
            total_debt: None,
            shares_outstanding: None,
            eps: None,
            prior_eps: None,
            prior_close: None,
            quarter_price: None,
            book_equity: None,
            monthly_returns: Vec::new(),
            segments: None,
            inst_ownership: None,
            intangible_assets: None,
            rd_expense: None,
            operating_expense: None,
            wt_ret: None,
        }
    }
}

/// Control set. `None` marks a field that could not be computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub sur_ear: Option<f64>,
    pub size: Option<f64>,
    pub roa: Option<f64>,
    /// Percent.
    pub ret_vol: Option<f64>,
    pub loss: Option<f64>,
    pub mkv: Option<f64>,
    pub lev: Option<f64>,
    pub tone: Option<f64>,
    pub uncert: Option<f64>,
    pub forward: Option<f64>,
    pub read: Option<f64>,
    pub bm: Option<f64>,
    pub num_ana: Option<f64>,
    pub wt_ret: Option<f64>,
    pub rd_exp: Option<f64>,
}

/// Names of the baseline controls, in regression order.
pub const BASELINE_CONTROLS: [&str; 11] = [
    "SurEar", "Size", "Roa", "RetVol", "Loss", "Mkv", "Lev", "Tone", "Uncert", "Forward", "Read",
];

/// Controls of the drift regressions.
pub const PEAD_CONTROLS: [&str; 6] = ["Mkv", "Roa", "BM", "Loss", "Num_Ana", "Wt_Ret"];

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d != 0.0 && n.is_finite() && d.is_finite() => Some(n / d),
        _ => None,
    }
}

fn positive(x: Option<f64>) -> Option<f64> {
    x.filter(|v| *v > 0.0 && v.is_finite())
}

/// Computes the control set from fundamentals, the presentation's text
/// metrics and the analyst following.
pub fn derive_controls(f: &Fundamentals, presentation: Option<&TextMetrics>, analyst_following: Option<u32>) -> Controls {
    let prior_close = positive(f.prior_close);
    let sur_ear = match (f.eps, f.prior_eps) {
        (Some(e), Some(p)) => ratio(Some(e - p), prior_close),
        _ => None,
    };
    let assets = f.total_assets.filter(|a| *a >= 0.0);
    let market_value = match (f.shares_outstanding, prior_close) {
        (Some(s), Some(p)) if s >= 0.0 => Some(s * p),
        _ => None,
    };
    let bm_price = positive(f.quarter_price).or(prior_close);
    let bm = match (f.book_equity, bm_price, positive(f.shares_outstanding)) {
        (Some(b), Some(p), Some(s)) => Some(b / (p * s)),
        _ => None,
    };
    let ret_vol = (f.monthly_returns.len() >= 2).then(|| 100.0 * sample_sd(&f.monthly_returns));
    Controls {
        sur_ear,
        size: assets.map(ln1p),
        roa: ratio(f.income_before_extra, positive(assets)),
        ret_vol,
        loss: f.net_income.map(|n| if n < 0.0 { 1.0 } else { 0.0 }),
        mkv: market_value.map(ln1p),
        lev: ratio(f.total_debt, positive(assets)),
        tone: presentation.map(|m| m.tone),
        uncert: presentation.map(|m| m.uncert),
        forward: presentation.map(|m| m.forward),
        read: presentation.map(|m| m.fog),
        bm,
        num_ana: analyst_following.map(|n| ln1p(f64::from(n))),
        wt_ret: f.wt_ret,
        // Missing R&D is treated as zero.
        rd_exp: Some(ratio(f.rd_expense, positive(f.operating_expense)).unwrap_or(0.0)),
    }
}

/// Which quantity drives the H_RD split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HrdBasis {
    #[default]
    IntangibleAssets,
    RdExpense,
}

pub fn hrd_input(f: &Fundamentals, basis: HrdBasis) -> Option<f64> {
    match basis {
        HrdBasis::IntangibleAssets => f.intangible_assets,
        HrdBasis::RdExpense => Some(ratio(f.rd_expense, positive(f.operating_expense)).unwrap_or(0.0)),
    }
}

/// 1 for values strictly above the mean of the present values.
pub fn above_mean_split(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    if present.is_empty() {
        return values.iter().map(|_| None).collect();
    }
    let m = present.iter().sum::<f64>() / present.len() as f64;
    values
        .iter()
        .map(|v| v.filter(|x| x.is_finite()).map(|x| if x > m { 1.0 } else { 0.0 }))
        .collect()
}

pub const COVID_START: (i32, u8) = (2019, 4);
pub const COVID_END: (i32, u8) = (2023, 2);

pub fn covid(q: Quarter) -> bool {
    let start = Quarter::new(COVID_START.0, COVID_START.1).expect("valid quarter");
    let end = Quarter::new(COVID_END.0, COVID_END.1).expect("valid quarter");
    (start..=end).contains(&q)
}

/// Quintile rank of each value mapped to {0, .25, .5, .75, 1}. Ranks are
/// assigned on a stable sort by (value, position); `None` stays `None`.
pub fn quintile_rank(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut idx: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|x| x.is_finite()).map(|x| (i, x)))
        .collect();
    idx.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let n = idx.len();
    let mut out = alloc::vec![None; values.len()];
    for (rank, (i, _)) in idx.into_iter().enumerate() {
        let quintile = (rank * 5) / n;
        out[i] = Some(quintile as f64 / 4.0);
    }
    out
}

/// Natural log guarded against non-positive input.
pub fn safe_ln(x: f64) -> Option<f64> {
    (x > 0.0 && x.is_finite()).then(|| ln(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn size_scale() {
        let f = Fundamentals {
            total_assets: Some(36_315.5),
            ..Fundamentals::empty("F", "2020Q1".parse().unwrap())
        };
        let c = derive_controls(&f, None, None);
        assert!((c.size.unwrap() - libm::log(36_316.5)).abs() < 1e-12);
        assert!((c.size.unwrap() - 10.50).abs() < 0.005);
    }

    #[test]
    fn simple_controls() {
        let f = Fundamentals {
            total_assets: Some(100.0),
            total_debt: Some(0.0),
            eps: Some(1.5),
            prior_eps: Some(1.5),
            prior_close: Some(30.0),
            net_income: Some(-2.0),
            income_before_extra: Some(-1.0),
            shares_outstanding: Some(10.0),
            monthly_returns: vec![0.01, 0.03],
            ..Fundamentals::empty("F", "2020Q1".parse().unwrap())
        };
        let c = derive_controls(&f, None, Some(9));
        assert_eq!(c.lev, Some(0.0));
        assert_eq!(c.sur_ear, Some(0.0));
        assert_eq!(c.loss, Some(1.0));
        assert_eq!(c.roa, Some(-0.01));
        assert!((c.mkv.unwrap() - libm::log(301.0)).abs() < 1e-12);
        assert!((c.num_ana.unwrap() - libm::log(10.0)).abs() < 1e-12);
        assert!((c.ret_vol.unwrap() - 100.0 * libm::sqrt(0.0002)).abs() < 1e-9);
        assert_eq!(c.rd_exp, Some(0.0));
        assert_eq!(c.tone, None);
    }

    #[test]
    fn covid_boundaries() {
        let q = |s: &str| s.parse::<Quarter>().unwrap();
        assert!(covid(q("2019Q4")));
        assert!(covid(q("2023Q2")));
        assert!(!covid(q("2023Q3")));
        assert!(!covid(q("2019Q3")));
    }

    #[test]
    fn quintiles() {
        let v: Vec<Option<f64>> = (0..10).map(|i| Some(f64::from(i))).collect();
        let r = quintile_rank(&v);
        assert_eq!(r[0], Some(0.0));
        assert_eq!(r[1], Some(0.0));
        assert_eq!(r[2], Some(0.25));
        assert_eq!(r[9], Some(1.0));
        let ties = quintile_rank(&[Some(1.0), None, Some(1.0), Some(1.0), Some(1.0), Some(1.0)]);
        assert_eq!(ties, vec![Some(0.0), None, Some(0.25), Some(0.5), Some(0.75), Some(1.0)]);
    }

    #[test]
    fn above_mean() {
        let s = above_mean_split(&[Some(1.0), Some(2.0), Some(3.0), None]);
        assert_eq!(s, vec![Some(0.0), Some(0.0), Some(1.0), None]);
    }
}
