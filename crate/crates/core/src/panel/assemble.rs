//! Joins call measures with forecasts, fundamentals, market data and
//! incentives into the firm-quarter panel, recording every drop.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::controls::{above_mean_split, covid, derive_controls, hrd_input, quintile_rank, Controls, Fundamentals, HrdBasis};
use super::forecast::{forecast_features, individual_features, DetailForecast, ForecastInputs, IndividualRow};
use super::market::{market_outcomes, DailyObs, MarketOutcomes};
use crate::date::Quarter;
use crate::lexicon::TextMetrics;
use crate::measures::{CallMeasures, ConversationMeasure};
use crate::stats::Frame;

/// Managerial incentive measures for one firm-quarter and one manager.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incentives {
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub comp: Option<f64>,
    pub lwealth: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelOptions {
    pub hrd_basis: HrdBasis,
}

/// Everything the panel is built from. Market series are per firm and
/// sorted by date; presentation metrics are keyed by transcript id.
#[derive(Debug, Clone, Copy)]
pub struct PanelSources<'a> {
    pub calls: &'a [CallMeasures],
    /// Call measures from a second model, joined by transcript id.
    pub alt_calls: Option<&'a [CallMeasures]>,
    pub forecasts: &'a [ForecastInputs],
    pub detail: &'a [DetailForecast],
    pub fundamentals: &'a [Fundamentals],
    pub market: &'a BTreeMap<String, Vec<DailyObs>>,
    pub incentives: &'a [Incentives],
    pub presentation: &'a BTreeMap<String, TextMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub transcript_id: String,
    pub nor_firm: f64,
    pub nor_f: f64,
    pub refusal: f64,
    pub lack: f64,
    pub legal: f64,
    pub recall: f64,
    pub irrelevant: f64,
    pub other: f64,
    pub mscore: Option<f64>,
    pub quantity: Option<f64>,
    pub relevance: Option<f64>,
    pub clarity: Option<f64>,
    pub nor_firm_alt: Option<f64>,
    pub nor_f_alt: Option<f64>,
    pub error: f64,
    pub dispersion: Option<f64>,
    pub uncertainty: Option<f64>,
    pub squ_error: Option<f64>,
    pub squ_uncertainty: Option<f64>,
    pub num_analysts: f64,
    pub controls: Controls,
    pub mo: Option<f64>,
    pub inst: Option<f64>,
    pub h_rd: Option<f64>,
    pub covid: f64,
    pub comp: Option<f64>,
    pub lwealth: Option<f64>,
    pub outcomes: MarketOutcomes,
    pub qr_ueps: Option<f64>,
}

/// Label columns of the panel frame.
pub const FIRM: &str = "firm_id";
pub const QUARTER: &str = "fiscal_quarter";
pub const TRANSCRIPT: &str = "transcript_id";

impl PanelRow {
    /// Numeric columns in output order.
    pub fn columns(&self) -> [(&'static str, Option<f64>); 48] {
        let c = &self.controls;
        let o = &self.outcomes;
        [
            ("NOR_Firm", Some(self.nor_firm)),
            ("NOR_F", Some(self.nor_f)),
            ("Refusal", Some(self.refusal)),
            ("Lack", Some(self.lack)),
            ("Legal", Some(self.legal)),
            ("Recall", Some(self.recall)),
            ("Irrelevant", Some(self.irrelevant)),
            ("Other", Some(self.other)),
            ("Mscore", self.mscore),
            ("Quantity", self.quantity),
            ("Relevance", self.relevance),
            ("Clarity", self.clarity),
            ("NOR_Firm_Alt", self.nor_firm_alt),
            ("NOR_F_Alt", self.nor_f_alt),
            ("Error", Some(self.error)),
            ("Dispersion", self.dispersion),
            ("Uncertainty", self.uncertainty),
            ("SquError", self.squ_error),
            ("SquUncertainty", self.squ_uncertainty),
            ("Num_Analysts", Some(self.num_analysts)),
            ("SurEar", c.sur_ear),
            ("Size", c.size),
            ("Roa", c.roa),
            ("RetVol", c.ret_vol),
            ("Loss", c.loss),
            ("Mkv", c.mkv),
            ("Lev", c.lev),
            ("Tone", c.tone),
            ("Uncert", c.uncert),
            ("Forward", c.forward),
            ("Read", c.read),
            ("BM", c.bm),
            ("Num_Ana", c.num_ana),
            ("Wt_Ret", c.wt_ret),
            ("Rd_Exp", c.rd_exp),
            ("MO", self.mo),
            ("Inst", self.inst),
            ("H_RD", self.h_rd),
            ("COVID", Some(self.covid)),
            ("Comp", self.comp),
            ("Lwealth", self.lwealth),
            ("CAR_2_60", o.car_2_60),
            ("BHAR_2_60", o.bhar_2_60),
            ("Ret_Sd", o.ret_sd),
            ("Volume", o.volume),
            ("Volume_Raw", o.volume_raw),
            ("Spread", o.spread),
            ("Qr_UEPS", self.qr_ueps),
        ]
    }

    fn required_controls(&self) -> bool {
        let c = &self.controls;
        [c.sur_ear, c.size, c.roa, c.ret_vol, c.loss, c.mkv, c.lev, c.tone, c.uncert, c.forward, c.read]
            .iter()
            .all(|v| v.is_some_and(f64::is_finite))
    }
}

/// Panel rows as a frame with `firm_id`, `fiscal_quarter` and
/// `transcript_id` label columns.
pub fn panel_frame(rows: &[PanelRow]) -> Frame {
    let mut f = Frame::new(rows.len());
    f.set_label(FIRM, rows.iter().map(|r| r.firm_id.clone()).collect());
    f.set_label(QUARTER, rows.iter().map(|r| r.fiscal_quarter.to_string()).collect());
    f.set_label(TRANSCRIPT, rows.iter().map(|r| r.transcript_id.clone()).collect());
    let Some(first) = rows.first() else {
        return f;
    };
    for (k, (name, _)) in first.columns().iter().enumerate() {
        f.set_optional(name, rows.iter().map(|r| r.columns()[k].1));
    }
    f
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerStage {
    pub stage: String,
    pub dropped: usize,
    pub remaining: usize,
    pub conversations_dropped: usize,
    pub conversations_remaining: usize,
}

/// Per-stage drops counted in calls and in their valid conversations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionLedger {
    pub input: usize,
    pub input_conversations: usize,
    pub stages: Vec<LedgerStage>,
}

impl SelectionLedger {
    pub fn start(input: usize, input_conversations: usize) -> SelectionLedger {
        SelectionLedger {
            input,
            input_conversations,
            stages: Vec::new(),
        }
    }

    pub fn record(&mut self, stage: &str, remaining: usize, conversations_remaining: usize) {
        let before = self.output();
        let conv_before = self.output_conversations();
        self.stages.push(LedgerStage {
            stage: stage.to_string(),
            dropped: before - remaining,
            remaining,
            conversations_dropped: conv_before - conversations_remaining,
            conversations_remaining,
        });
    }

    /// Appends the stages of `later`, whose input must equal this output.
    pub fn extend(&mut self, later: &SelectionLedger) {
        self.stages.extend(later.stages.iter().cloned());
    }

    pub fn output(&self) -> usize {
        self.stages.last().map_or(self.input, |s| s.remaining)
    }

    pub fn output_conversations(&self) -> usize {
        self.stages
            .last()
            .map_or(self.input_conversations, |s| s.conversations_remaining)
    }

    pub fn total_dropped(&self) -> usize {
        self.stages.iter().map(|s| s.dropped).sum()
    }

    /// Plain-text table: one line per stage with drops in parentheses.
    pub fn render(&self, title: &str) -> String {
        let line = |label: &str, a: String, b: String| alloc::format!("{label:<56}{a:>14}{b:>16}\n");
        let mut out = alloc::format!("{title}\n");
        out.push_str(&line("Selection", "Transcripts".into(), "Conversations".into()));
        out.push_str(&line("Input", self.input.to_string(), self.input_conversations.to_string()));
        for s in &self.stages {
            out.push_str(&line(
                &alloc::format!("less {}", s.stage),
                alloc::format!("({})", s.dropped),
                alloc::format!("({})", s.conversations_dropped),
            ));
            out.push_str(&line("", s.remaining.to_string(), s.conversations_remaining.to_string()));
        }
        out.push_str(&line(
            "Final sample",
            self.output().to_string(),
            self.output_conversations().to_string(),
        ));
        out
    }
}

fn conversations<'a, T: 'a>(items: impl IntoIterator<Item = &'a T>, calls: impl Fn(&T) -> &CallMeasures) -> usize {
    items.into_iter().map(|t| calls(t).n_exchanges as usize).sum()
}

type Key = (String, Quarter);

fn key_of(firm: &str, q: Quarter) -> Key {
    (firm.to_string(), q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledPanel {
    pub rows: Vec<PanelRow>,
    pub individual: Vec<IndividualRow>,
    pub ledger: SelectionLedger,
}

/// Inner joins calls with forecasts, prices and fundamentals; market
/// outcomes and incentives are left joins. Partition splits and the
/// quintile rank are computed on the final sample.
pub fn assemble_panel(src: &PanelSources<'_>, opts: PanelOptions) -> AssembledPanel {
    let mut ledger = SelectionLedger::start(src.calls.len(), conversations(src.calls, |c| c));

    let mut calls: BTreeMap<Key, &CallMeasures> = BTreeMap::new();
    for c in src.calls {
        let k = key_of(&c.firm_id, c.fiscal_quarter);
        match calls.get(&k) {
            Some(prev) if prev.transcript_id <= c.transcript_id => {}
            _ => {
                calls.insert(k, c);
            }
        }
    }
    ledger.record("duplicate firm-quarter calls", calls.len(), conversations(calls.values(), |c| c));

    let forecasts: BTreeMap<Key, &ForecastInputs> =
        src.forecasts.iter().map(|f| (key_of(&f.firm_id, f.fiscal_quarter), f)).collect();
    let with_forecasts: Vec<(&CallMeasures, &ForecastInputs)> = calls
        .iter()
        .filter_map(|(k, c)| forecasts.get(k).map(|f| (*c, *f)))
        .collect();
    ledger.record("calls without analyst forecasts", with_forecasts.len(), conversations(&with_forecasts, |t| t.0));

    let priced: Vec<_> = with_forecasts
        .into_iter()
        .filter_map(|(c, f)| forecast_features(f).ok().map(|ff| (c, f, ff)))
        .collect();
    ledger.record("calls without prior closing price", priced.len(), conversations(&priced, |t| t.0));

    let fundamentals: BTreeMap<Key, &Fundamentals> =
        src.fundamentals.iter().map(|f| (key_of(&f.firm_id, f.fiscal_quarter), f)).collect();
    let with_fund: Vec<_> = priced
        .into_iter()
        .filter_map(|(c, f, ff)| fundamentals.get(&key_of(&c.firm_id, c.fiscal_quarter)).map(|fu| (c, f, ff, *fu)))
        .collect();
    ledger.record("calls without fundamentals", with_fund.len(), conversations(&with_fund, |t| t.0));

    let alt: BTreeMap<&str, &CallMeasures> = src
        .alt_calls
        .unwrap_or(&[])
        .iter()
        .map(|c| (c.transcript_id.as_str(), c))
        .collect();
    let mut incentives: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for i in src.incentives {
        let e = incentives.entry(key_of(&i.firm_id, i.fiscal_quarter)).or_default();
        e.0.extend(i.comp.filter(|v| v.is_finite()));
        e.1.extend(i.lwealth.filter(|v| v.is_finite()));
    }
    let avg = |v: &Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);

    let mut rows = Vec::new();
    let mut kept_conversations = 0usize;
    let mut raw_splits: Vec<(Option<f64>, Option<f64>, Option<f64>)> = Vec::new();
    for (c, f, ff, fu) in with_fund {
        let controls = derive_controls(fu, src.presentation.get(&c.transcript_id), Some(f.analyst_following));
        let outcomes = src
            .market
            .get(&c.firm_id)
            .map(|s| market_outcomes(s, f.announcement_date))
            .unwrap_or_default();
        let inc = incentives.get(&key_of(&c.firm_id, c.fiscal_quarter));
        let alt_call = alt.get(c.transcript_id.as_str());
        let cats = &c.categories;
        let row = PanelRow {
            firm_id: c.firm_id.clone(),
            fiscal_quarter: c.fiscal_quarter,
            transcript_id: c.transcript_id.clone(),
            nor_firm: c.nor_firm as f64,
            nor_f: f64::from(c.nor_f),
            refusal: cats.refusal as f64,
            lack: cats.lack as f64,
            legal: cats.legal as f64,
            recall: cats.recall as f64,
            irrelevant: cats.irrelevant as f64,
            other: cats.other as f64,
            mscore: c.mscore,
            quantity: c.quantity,
            relevance: c.relevance,
            clarity: c.clarity,
            nor_firm_alt: alt_call.map(|a| a.nor_firm as f64),
            nor_f_alt: alt_call.map(|a| f64::from(a.nor_f)),
            error: ff.error.unwrap_or(f64::NAN),
            dispersion: ff.dispersion,
            uncertainty: ff.uncertainty,
            squ_error: ff.squ_error,
            squ_uncertainty: ff.squ_uncertainty,
            num_analysts: f64::from(f.analyst_following),
            controls,
            mo: None,
            inst: None,
            h_rd: None,
            covid: if covid(c.fiscal_quarter) { 1.0 } else { 0.0 },
            comp: inc.and_then(|i| avg(&i.0)),
            lwealth: inc.and_then(|i| avg(&i.1)),
            outcomes,
            qr_ueps: None,
        };
        if row.required_controls() {
            raw_splits.push((fu.segments, fu.inst_ownership, hrd_input(fu, opts.hrd_basis)));
            kept_conversations += c.n_exchanges as usize;
            rows.push(row);
        }
    }
    ledger.record("calls missing required controls", rows.len(), kept_conversations);

    let mo = above_mean_split(&raw_splits.iter().map(|s| s.0).collect::<Vec<_>>());
    let inst = above_mean_split(&raw_splits.iter().map(|s| s.1).collect::<Vec<_>>());
    let hrd = above_mean_split(&raw_splits.iter().map(|s| s.2).collect::<Vec<_>>());
    for (i, r) in rows.iter_mut().enumerate() {
        r.mo = mo[i];
        r.inst = inst[i];
        r.h_rd = hrd[i];
    }
    let mut by_quarter: BTreeMap<Quarter, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_quarter.entry(r.fiscal_quarter).or_default().push(i);
    }
    for idx in by_quarter.values() {
        let ranks = quintile_rank(&idx.iter().map(|&i| rows[i].controls.sur_ear).collect::<Vec<_>>());
        for (&i, q) in idx.iter().zip(ranks) {
            rows[i].qr_ueps = q;
        }
    }

    let individual = individual_panel(&rows, src.forecasts, src.detail);
    AssembledPanel { rows, individual, ledger }
}

/// Individual-analyst rows for the firm-quarters of the final panel.
fn individual_panel(rows: &[PanelRow], forecasts: &[ForecastInputs], detail: &[DetailForecast]) -> Vec<IndividualRow> {
    let mut by_key: BTreeMap<Key, Vec<DetailForecast>> = BTreeMap::new();
    for d in detail {
        by_key.entry(key_of(&d.firm_id, d.fiscal_quarter)).or_default().push(d.clone());
    }
    let forecasts: BTreeMap<Key, &ForecastInputs> =
        forecasts.iter().map(|f| (key_of(&f.firm_id, f.fiscal_quarter), f)).collect();
    let mut out = Vec::new();
    for r in rows {
        let k = key_of(&r.firm_id, r.fiscal_quarter);
        let (Some(f), Some(d)) = (forecasts.get(&k), by_key.get(&k)) else {
            continue;
        };
        if let Ok(ind) = individual_features(f, d) {
            out.extend(ind.into_iter().map(|mut i| {
                i.nor_firm = Some(r.nor_firm);
                i
            }));
        }
    }
    out
}

pub fn individual_frame(rows: &[IndividualRow]) -> Frame {
    let mut f = Frame::new(rows.len());
    f.set_label("analyst_id", rows.iter().map(|r| r.analyst_id.clone()).collect());
    f.set_label(FIRM, rows.iter().map(|r| r.firm_id.clone()).collect());
    f.set_label(QUARTER, rows.iter().map(|r| r.fiscal_quarter.to_string()).collect());
    f.set_numeric("Error_Individual", rows.iter().map(|r| r.error_individual).collect());
    f.set_numeric("Time_Individual", rows.iter().map(|r| r.time_individual).collect());
    f.set_optional("NOR_Firm", rows.iter().map(|r| r.nor_firm));
    f
}

/// Text features of one exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeInfo {
    pub conver_id: String,
    pub order: u32,
    pub word: usize,
    pub metrics: TextMetrics,
}

/// One conversation of a call in the final panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRow {
    pub conver_id: String,
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub nor_c: f64,
    pub nor_con: f64,
    pub nor_c_alt: Option<f64>,
    pub word: f64,
    pub order: f64,
    pub quantity: Option<f64>,
    pub relevance: Option<f64>,
    pub clarity: Option<f64>,
    pub tone_q: f64,
    pub uncert_q: f64,
    pub forward_q: f64,
    pub read_q: f64,
    pub rd_exp: Option<f64>,
    pub size: Option<f64>,
    pub roa: Option<f64>,
    pub loss: Option<f64>,
}

/// Conversation-level rows for every valid conversation of a call in
/// `panel`. `alt` holds the second model's conversation measures.
pub fn conversation_panel(
    panel: &[PanelRow],
    calls: &[CallMeasures],
    alt: &[ConversationMeasure],
    exchanges: &BTreeMap<String, ExchangeInfo>,
) -> Vec<ConversationRow> {
    let by_transcript: BTreeMap<&str, &CallMeasures> = calls.iter().map(|c| (c.transcript_id.as_str(), c)).collect();
    let alt: BTreeMap<&str, &ConversationMeasure> = alt.iter().map(|c| (c.conver_id.as_str(), c)).collect();
    let mut out = Vec::new();
    for r in panel {
        let Some(call) = by_transcript.get(r.transcript_id.as_str()) else {
            continue;
        };
        for conv in &call.conversations {
            let Some(x) = exchanges.get(&conv.conver_id) else {
                continue;
            };
            out.push(ConversationRow {
                conver_id: conv.conver_id.clone(),
                firm_id: r.firm_id.clone(),
                fiscal_quarter: r.fiscal_quarter,
                nor_c: f64::from(conv.nor_c),
                nor_con: f64::from(conv.nor_con),
                nor_c_alt: alt.get(conv.conver_id.as_str()).map(|a| f64::from(a.nor_c)),
                word: x.word as f64,
                order: f64::from(x.order),
                quantity: conv.quantity.map(f64::from),
                relevance: conv.relevance.map(f64::from),
                clarity: conv.clarity.map(f64::from),
                tone_q: x.metrics.tone,
                uncert_q: x.metrics.uncert,
                forward_q: x.metrics.forward,
                read_q: x.metrics.fog,
                rd_exp: r.controls.rd_exp,
                size: r.controls.size,
                roa: r.controls.roa,
                loss: r.controls.loss,
            });
        }
    }
    out
}

pub fn conversation_frame(rows: &[ConversationRow]) -> Frame {
    let mut f = Frame::new(rows.len());
    f.set_label("conver_id", rows.iter().map(|r| r.conver_id.clone()).collect());
    f.set_label(FIRM, rows.iter().map(|r| r.firm_id.clone()).collect());
    f.set_label(QUARTER, rows.iter().map(|r| r.fiscal_quarter.to_string()).collect());
    let cols: [(&str, fn(&ConversationRow) -> Option<f64>); 16] = [
        ("NOR_C", |r| Some(r.nor_c)),
        ("NOR_Con", |r| Some(r.nor_con)),
        ("NOR_C_Alt", |r| r.nor_c_alt),
        ("Word", |r| Some(r.word)),
        ("Order", |r| Some(r.order)),
        ("Quantity", |r| r.quantity),
        ("Relevance", |r| r.relevance),
        ("Clarity", |r| r.clarity),
        ("Tone_Q", |r| Some(r.tone_q)),
        ("Forward_Q", |r| Some(r.forward_q)),
        ("Read_Q", |r| Some(r.read_q)),
        ("Uncert_Q", |r| Some(r.uncert_q)),
        ("Rd_Exp", |r| r.rd_exp),
        ("Size", |r| r.size),
        ("Roa", |r| r.roa),
        ("Loss", |r| r.loss),
    ];
    for (name, get) in cols {
        f.set_optional(name, rows.iter().map(get));
    }
    f
}
