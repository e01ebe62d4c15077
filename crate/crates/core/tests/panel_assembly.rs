use std::collections::BTreeMap;

use nonanswer_core::elicitor::{validate_reply, NorAnnotation};
use nonanswer_core::lexicon::TextMetrics;
use nonanswer_core::measures::{summarize_call, CallKey, CallMeasures};
use nonanswer_core::panel::assemble::{assemble_panel, panel_frame, Incentives, PanelOptions, PanelSources};
use nonanswer_core::panel::{DailyObs, Fundamentals};
use nonanswer_core::panel::ForecastInputs;
use nonanswer_core::{Date, Quarter};

struct Fixture {
    calls: Vec<CallMeasures>,
    forecasts: Vec<ForecastInputs>,
    fundamentals: Vec<Fundamentals>,
    presentation: BTreeMap<String, TextMetrics>,
    market: BTreeMap<String, Vec<DailyObs>>,
    incentives: Vec<Incentives>,
}

fn annotation(conver_id: &str, nor: u8) -> NorAnnotation {
    let raw = if nor == 0 {
        r#"{"NOR": 0, "Pair": null, "Category": null, "Quantity": 8, "Relevance": 9, "Clarity": 9}"#.to_string()
    } else {
        format!(r#"{{"NOR": {nor}, "Pair": null, "Category": "Refusal", "Quantity": 3, "Relevance": 5, "Clarity": 7}}"#)
    };
    validate_reply(&raw).with_ids(conver_id, "test")
}

/// `n_firms` × 8 quarters from 2019Q1; the first `no_price` firm-quarters
/// have a zero prior close in the forecast summary.
fn fixture(n_firms: usize, no_price: usize) -> Fixture {
    let mut fx = Fixture {
        calls: Vec::new(),
        forecasts: Vec::new(),
        fundamentals: Vec::new(),
        presentation: BTreeMap::new(),
        market: BTreeMap::new(),
        incentives: Vec::new(),
    };
    let start = Quarter::new(2019, 1).unwrap();
    let mut k = 0;
    for f in 0..n_firms {
        let firm = format!("F{f:02}");
        for q in 0..8 {
            let quarter = Quarter::from_index(start.index() + q);
            let tid = format!("{firm}_{quarter}");
            let anns: Vec<NorAnnotation> =
                (1..=4).map(|o| annotation(&format!("{tid}-{o}"), ((f + q as usize + o) % 3) as u8)).collect();
            let key = CallKey {
                transcript_id: tid.clone(),
                firm_id: firm.clone(),
                fiscal_quarter: quarter,
            };
            fx.calls.push(summarize_call(&key, &anns).unwrap());
            let price = if k < no_price { 0.0 } else { 20.0 + f as f64 };
            k += 1;
            fx.forecasts.push(ForecastInputs {
                firm_id: firm.clone(),
                fiscal_quarter: quarter,
                consensus_mean_eps: 1.0 + 0.01 * q as f64,
                analyst_forecasts: vec![0.95, 1.0, 1.05 + 0.01 * f as f64],
                forecast_sd: None,
                actual_eps: 1.02,
                analyst_following: (1 + f % 4) as u32,
                prior_close: price,
                announcement_date: Date::new(quarter.year(), quarter.q() * 3, 20).unwrap(),
            });
            fx.fundamentals.push(Fundamentals {
                total_assets: Some(1000.0 + 10.0 * f as f64),
                income_before_extra: Some(12.0 + q as f64),
                net_income: Some(if (f + q as usize) % 5 == 0 { -1.0 } else { 5.0 }),
                total_debt: Some(300.0),
                shares_outstanding: Some(50.0),
                eps: Some(1.02),
                prior_eps: Some(0.9 + 0.01 * f as f64),
                prior_close: Some(20.0 + f as f64),
                book_equity: Some(400.0),
                monthly_returns: (0..12).map(|m| 0.01 * ((m + f) % 4) as f64).collect(),
                segments: Some((1 + f % 3) as f64),
                inst_ownership: Some(0.1 * (f % 7) as f64),
                intangible_assets: Some(f as f64),
                wt_ret: Some(0.01),
                ..Fundamentals::empty(&firm, quarter)
            });
            fx.presentation.insert(
                tid,
                TextMetrics {
                    tone: 0.2,
                    uncert: 0.01,
                    forward: 0.02,
                    fog: 15.0,
                    word_count: 500,
                },
            );
        }
        if f % 2 == 0 {
            fx.incentives.push(Incentives {
                firm_id: firm.clone(),
                fiscal_quarter: start,
                comp: Some(2.0),
                lwealth: Some(4.0),
            });
            fx.incentives.push(Incentives {
                firm_id: firm.clone(),
                fiscal_quarter: start,
                comp: Some(4.0),
                lwealth: None,
            });
        }
    }
    fx
}

fn sources(fx: &Fixture) -> PanelSources<'_> {
    PanelSources {
        calls: &fx.calls,
        alt_calls: None,
        forecasts: &fx.forecasts,
        detail: &[],
        fundamentals: &fx.fundamentals,
        market: &fx.market,
        incentives: &fx.incentives,
        presentation: &fx.presentation,
    }
}

#[test]
fn three_missing_prices_leave_77_rows() {
    let fx = fixture(10, 3);
    let out = assemble_panel(&sources(&fx), PanelOptions::default());
    assert_eq!(out.ledger.input, 80);
    assert_eq!(out.rows.len(), 77);
    assert_eq!(out.ledger.output(), 77);
    let price_stage = out.ledger.stages.iter().find(|s| s.stage.contains("price")).unwrap();
    assert_eq!(price_stage.dropped, 3);
    assert_eq!(out.ledger.input - out.ledger.total_dropped(), out.ledger.output());
    assert!(out.ledger.render("Sample selection").contains("(3)"));
}

#[test]
fn missing_forecast_counted_at_its_stage() {
    let mut fx = fixture(3, 0);
    fx.forecasts.remove(5);
    let out = assemble_panel(&sources(&fx), PanelOptions::default());
    let stage = out.ledger.stages.iter().find(|s| s.stage.contains("forecast")).unwrap();
    assert_eq!(stage.dropped, 1);
    assert_eq!(out.rows.len(), 23);
}

#[test]
fn single_complete_firm_quarter_gives_one_row() {
    let mut fx = fixture(1, 0);
    fx.calls.truncate(1);
    let out = assemble_panel(&sources(&fx), PanelOptions::default());
    assert_eq!(out.rows.len(), 1);
}

#[test]
fn rows_satisfy_uncertainty_identity_and_flags() {
    let fx = fixture(10, 0);
    let out = assemble_panel(&sources(&fx), PanelOptions::default());
    for r in &out.rows {
        let n = r.num_analysts;
        match (r.dispersion, r.uncertainty) {
            (Some(d), Some(u)) => assert!((u - ((1.0 - 1.0 / n) * d + r.error)).abs() < 1e-12),
            (_, Some(u)) => {
                assert_eq!(n, 1.0);
                assert_eq!(u, r.error);
            }
            _ => panic!("uncertainty missing"),
        }
        assert_eq!(r.error == 0.0, r.squ_error == Some(0.0));
        let expect = if r.fiscal_quarter >= "2019Q4".parse().unwrap() { 1.0 } else { 0.0 };
        assert_eq!(r.covid, expect);
        assert!(r.mo.is_some() && r.inst.is_some() && r.h_rd.is_some());
        assert!(r.qr_ueps.is_some());
        assert!(r.outcomes.car_2_60.is_none());
    }
    let first = out.rows.iter().find(|r| r.firm_id == "F00" && r.fiscal_quarter == Quarter::new(2019, 1).unwrap()).unwrap();
    assert_eq!(first.comp, Some(3.0));
    assert_eq!(first.lwealth, Some(4.0));
    let frame = panel_frame(&out.rows);
    assert_eq!(frame.len(), 80);
    assert!(frame.numeric("NOR_Firm").is_some());
    assert!(frame.label("firm_id").is_some());
}
