//! Deterministic synthetic corpus and market data with a planted
//! non-response effect: every analyst, market and text input the pipeline
//! reads, generated from one seed.
//!
//! Each call draws a latent opacity. Opacity drives how many manager
//! answers carry non-response cues, and each non-response widens the
//! common forecast error, the spread of analyst forecasts, post-call
//! volatility, volume and bid-ask spreads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nonanswer_core::corpus::{Role, Transcript, Turn};
use nonanswer_core::date::{Date, Quarter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub firms: usize,
    pub first_quarter: Quarter,
    pub quarters: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            firms: 48,
            first_quarter: Quarter::new(2019, 1).expect("valid quarter"),
            quarters: 8,
            seed: 20_240_101,
        }
    }
}

/// Generated files as (relative path, contents). Corpus and tabular files
/// are relative to the data directory, word lists to the lexicon directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthData {
    pub data: Vec<(String, String)>,
    pub lexicon: Vec<(String, String)>,
}

impl SynthData {
    pub fn write(&self, data_dir: &Path, lexicon_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (dir, files) in [(data_dir, &self.data), (lexicon_dir, &self.lexicon)] {
            for (name, text) in files {
                let p = dir.join(name);
                io::write_text(&p, text)?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

const POSITIVE: &[&str] = &[
    "strong", "growth", "improved", "record", "excellent", "gains", "success", "momentum", "robust", "efficient",
    "outperformed", "favorable", "achieved", "progress", "resilient",
];
const NEGATIVE: &[&str] = &[
    "weak", "loss", "headwinds", "difficult", "adverse", "impairment", "shortfall", "disappointing", "volatile",
    "challenging", "deteriorated", "slowdown", "pressure", "downturn", "unfavorable",
];
const UNCERTAIN: &[&str] = &[
    "may", "approximately", "uncertain", "could", "possibly", "depend", "risk", "variable", "fluctuate",
    "unpredictable", "probably", "tentative", "unclear", "assumptions",
];
const FORWARD: &[&str] = &[
    "expect", "anticipate", "outlook", "guidance", "plan", "forecast", "intend", "project", "target", "going forward",
    "next year", "over time",
];

const GOOD_ADJ: &[&str] = &["strong", "robust", "excellent", "favorable", "resilient", "efficient"];
const BAD_ADJ: &[&str] = &["weak", "difficult", "adverse", "disappointing", "volatile", "challenging", "unfavorable"];

const TOPICS: &[&str] = &[
    "gross margins",
    "pricing",
    "the backlog",
    "capital allocation",
    "inventory levels",
    "the buyback program",
    "demand trends",
    "input costs",
    "hiring plans",
    "the new product line",
    "free cash flow",
    "international sales",
    "the integration of the acquisition",
    "channel partners",
    "working capital",
    "the services business",
];

const FIRST_NAMES: &[&str] = &[
    "Alex", "Maria", "James", "Priya", "Chen", "Laura", "Omar", "Sofia", "Daniel", "Keiko", "Ravi", "Hannah",
    "Lucas", "Fatima", "Peter", "Nadia", "Victor", "Grace", "Tomas", "Ines",
];
const LAST_NAMES: &[&str] = &[
    "Walker", "Novak", "Ibrahim", "Lindqvist", "Moreau", "Tanaka", "Okafor", "Russo", "Schmidt", "Alvarez",
    "Kowalski", "Bennett", "Haddad", "Sato", "Fischer", "Murphy", "Costa", "Larsen",
];
const BANKS: &[&str] = &[
    "Northgate Securities", "Harbor Capital", "Summit Partners", "Bridgewell Research", "Crescent Markets",
    "Alder Street", "Keystone Equity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cue {
    Lack,
    Refusal,
    Recall,
    Legal,
    Irrelevant,
}

const CUE_WEIGHTS: [(Cue, u32); 5] =
    [(Cue::Lack, 40), (Cue::Refusal, 25), (Cue::Recall, 15), (Cue::Legal, 10), (Cue::Irrelevant, 10)];

fn pick<'a, T: ?Sized>(rng: &mut ChaCha8Rng, items: &'a [&'a T]) -> &'a T {
    items.choose(rng).expect("non-empty list")
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Openers that move the analyst-side tone and forward-looking ratios.
const OPENERS: &[&str] = &[
    "",
    "",
    "Congratulations on the strong results. ",
    "Given the headwinds you flagged, ",
    "Looking at the outlook, ",
    "Despite the difficult backdrop, ",
    "Great progress on margins. ",
    "Thinking about next year, ",
];

fn question(rng: &mut ChaCha8Rng, topic: &str) -> String {
    let opener = pick(rng, OPENERS);
    let body = question_body(rng, topic);
    if opener.is_empty() {
        body
    } else if opener.ends_with(", ") {
        let mut c = body.chars();
        let first = c.next().map(|f| f.to_lowercase().collect::<String>()).unwrap_or_default();
        format!("{opener}{first}{}", c.as_str())
    } else {
        format!("{opener}{body}")
    }
}

fn question_body(rng: &mut ChaCha8Rng, topic: &str) -> String {
    match rng.gen_range(0..5) {
        0 => format!("Can you talk about {topic} and how it shaped the quarter?"),
        1 => format!("How should we think about {topic} for the rest of the year?"),
        2 => format!("Could you give us more color on {topic}, particularly the trend in the last month?"),
        3 => format!("What drove the change in {topic} compared with last quarter?"),
        _ => format!("On {topic}, how much of the improvement is structural versus timing?"),
    }
}

fn follow_up(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => "And just to clarify, does that include the effect of currency?".into(),
        1 => "Understood. Is that a reasonable run rate for next quarter?".into(),
        _ => "Thanks. And how does that compare with what you saw a year ago?".into(),
    }
}

/// An answer free of any non-response cue.
fn answer(rng: &mut ChaCha8Rng, topic: &str) -> String {
    let pct = rng.gen_range(2..15);
    let good = pick(rng, GOOD_ADJ);
    match rng.gen_range(0..8) {
        7 => format!(
            "So on {topic} there are a lot of moving pieces and we have been working through them with the teams in each region over the last several months while also keeping an eye on pricing and mix and the broader demand picture."
        ),
        5 => "We feel good about the trajectory and will share more at the investor day.".into(),
        6 => "Broadly speaking, things are tracking the way we laid out at the start of the year.".into(),
        0 => format!(
            "Sure. {} improved by about {pct} percent this quarter, helped by {good} execution across our regions. We expect that trend to continue into the next quarter.",
            capitalize(topic)
        ),
        1 => format!(
            "Good question. We saw {good} results in {topic}, and the team delivered roughly {pct} percent better than plan. Most of that came from volume rather than price."
        ),
        2 => format!(
            "Thanks for the question. {} moved in line with our framework, up {pct} percent year over year, and we remain comfortable with the guidance we gave in the prior call.",
            capitalize(topic)
        ),
        3 => format!(
            "Yes, so {topic} was a {good} contributor. We added capacity early in the quarter and that allowed us to capture about {pct} points of incremental share."
        ),
        _ => format!(
            "On {topic}, the underlying drivers are healthy. Orders grew {pct} percent and conversion stayed {good}, so we feel good about where we sit."
        ),
    }
}

/// An answer carrying exactly one cue of the given class.
fn evasive(rng: &mut ChaCha8Rng, cue: Cue, topic: &str) -> String {
    let v = rng.gen_range(0..3);
    let lead = if rng.gen_bool(0.3) {
        format!("Beyond the {} percent and {} million we gave earlier, ", rng.gen_range(2..9), rng.gen_range(10..90))
    } else {
        String::new()
    };
    let body = match (cue, v) {
        (Cue::Lack, 0) => format!("Honestly, it is too early to tell how {topic} will develop from here."),
        (Cue::Lack, 1) => format!("We have no visibility into {topic} beyond the current quarter, so we will see."),
        (Cue::Lack, _) => format!("I'm not sure we can size {topic} for you yet. The picture is still forming."),
        (Cue::Refusal, 0) => format!("We are not going to comment on {topic} at this point."),
        (Cue::Refusal, 1) => format!("We would prefer not to give specifics on {topic} today."),
        (Cue::Refusal, _) => format!("We really don't break that out, and {topic} is no exception."),
        (Cue::Recall, 0) => format!("Let me get back to you on {topic} after the call."),
        (Cue::Recall, 1) => format!("That is a detailed one. We can follow up offline on {topic}."),
        (Cue::Recall, _) => format!("I will have the team circle back on {topic} with the exact figure."),
        (Cue::Legal, 0) => format!("Given the pending litigation, there is little we can add on {topic}."),
        (Cue::Legal, 1) => format!("Because that matter is under investigation, we will keep remarks on {topic} brief."),
        (Cue::Legal, _) => format!("On advice of counsel we will leave {topic} there for now."),
        (Cue::Irrelevant, 0) => "That is a different question from the one we prepared for. Overall the quarter was good.".into(),
        (Cue::Irrelevant, 1) => "I would rather focus on the product launch, which is going very well.".into(),
        (Cue::Irrelevant, _) => "I would rather talk about our customer wins this quarter, which were many.".into(),
    };
    if lead.is_empty() || body.starts_with("I ") || body.starts_with("I'") {
        return lead + &body;
    }
    let mut c = body.chars();
    let first = c.next().map(|f| f.to_lowercase().collect::<String>()).unwrap_or_default();
    lead + &first + c.as_str()
}

fn draw_cue(rng: &mut ChaCha8Rng) -> Cue {
    let total: u32 = CUE_WEIGHTS.iter().map(|w| w.1).sum();
    let mut x = rng.gen_range(0..total);
    for (c, w) in CUE_WEIGHTS {
        if x < w {
            return c;
        }
        x -= w;
    }
    Cue::Lack
}

fn presentation(rng: &mut ChaCha8Rng, firm: &str, q: Quarter, tone: f64) -> String {
    let mut s = format!("Good morning and welcome to the {firm} earnings call for {q}. ");
    let n = rng.gen_range(6..11);
    for _ in 0..n {
        let positive = rng.gen_bool((0.5 + 0.35 * tone).clamp(0.05, 0.95));
        let word = if positive { pick(rng, GOOD_ADJ) } else { pick(rng, BAD_ADJ) };
        let topic = pick(rng, TOPICS);
        let sentence = match rng.gen_range(0..6) {
            0 => format!("Revenue this quarter reflected {word} conditions in {topic}. "),
            1 => format!("We {} that {topic} {} improve as the year unfolds. ", pick(rng, &["expect", "anticipate", "plan"]), pick(rng, &["may", "could", "will"])),
            2 => format!("Operating income showed {word} performance, and management considers the {} across our international operations. ", pick(rng, &["outlook", "guidance", "forecast"])),
            3 => format!("Results remain {} on the macroeconomic environment, which is {}. ", pick(rng, &["dependent", "contingent"]), pick(rng, &["uncertain", "unpredictable", "variable"])),
            4 => format!("Our teams delivered {word} execution on {topic} despite seasonal effects. "),
            _ => format!("Approximately {} percent of sales came from recurring contracts, a {word} mix. ", rng.gen_range(20..70)),
        };
        s.push_str(&sentence);
    }
    s.push_str("With that, we will open the line for questions.");
    s
}

struct Firm {
    id: String,
    evasive: f64,
    analysts: usize,
    price0: f64,
    shares: f64,
    assets: f64,
    base_eps: f64,
    lev: f64,
    idio_vol: f64,
    month_vol: f64,
    base_volume: f64,
    spread: f64,
    segments: u32,
    inst: f64,
    intangible: f64,
    rd: f64,
    fe_error: f64,
    analyst_names: Vec<(String, &'static str)>,
}

struct Call {
    firm: usize,
    quarter: Quarter,
    nor: u32,
    announcement: Date,
    eps: f64,
    prior_eps: f64,
}

fn quarter_end(q: Quarter) -> Date {
    let next = q.next();
    Date::new(next.year(), (next.q() - 1) * 3 + 1, 1).expect("valid date").add_days(-1)
}

fn trading_days(from: Date, to: Date) -> Vec<Date> {
    let mut out = Vec::new();
    let mut d = from;
    while d <= to {
        // 1970-01-01 was a Thursday.
        if (d.days_since_epoch() + 3).rem_euclid(7) < 5 {
            out.push(d);
        }
        d = d.add_days(1);
    }
    out
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Generates the corpus, the five tabular inputs and the word lists.
pub fn generate(opts: &SynthOptions) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let quarters: Vec<Quarter> = (0..opts.quarters)
        .map(|i| Quarter::from_index(opts.first_quarter.index() + i as i64))
        .collect();

    let firms: Vec<Firm> = (0..opts.firms)
        .map(|i| {
            let assets = (9.0 + 1.2 * normal(&mut rng)).exp();
            let analysts = rng.gen_range(3..10);
            Firm {
                id: format!("F{:03}", i + 1),
                evasive: rng.gen_range(0.0..1.0),
                analysts,
                price0: rng.gen_range(15.0..90.0),
                shares: rng.gen_range(50.0..2000.0),
                assets,
                base_eps: 0.8 + 0.5 * normal(&mut rng),
                lev: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.05..0.6) },
                idio_vol: rng.gen_range(0.008..0.025),
                month_vol: rng.gen_range(0.04..0.12),
                base_volume: (13.0 + normal(&mut rng)).exp(),
                spread: rng.gen_range(0.0005..0.004),
                segments: rng.gen_range(1..7),
                inst: rng.gen_range(0.3..0.9),
                intangible: assets * rng.gen_range(0.0..0.4),
                rd: rng.gen_range(0.0..0.2),
                fe_error: rng.gen_range(0.0..1.0),
                analyst_names: (0..analysts)
                    .map(|_| {
                        let name = format!("{} {}", pick(&mut rng, FIRST_NAMES), pick(&mut rng, LAST_NAMES));
                        (name, pick(&mut rng, BANKS))
                    })
                    .collect(),
            }
        })
        .collect();

    // Transcripts.
    let mut data = Vec::new();
    let mut calls = Vec::new();
    let mut serial = 1000;
    let mut versioned = 0;
    for (fi, f) in firms.iter().enumerate() {
        let mut prior_eps = f.base_eps + 0.15 * normal(&mut rng);
        for &q in &quarters {
            serial += 1;
            let transcript_id = format!("TR{serial}");
            let opacity = normal(&mut rng);
            let p_nor = (0.04 + 0.14 * f.evasive + 0.05 * opacity).clamp(0.01, 0.5);
            let tone = (0.4 * normal(&mut rng)).clamp(-1.0, 1.0);
            let mut turns = Vec::new();
            let mut nor = 0;
            let n_exchanges = rng.gen_range(6..13);
            let mut last_analyst = usize::MAX;
            for k in 0..n_exchanges {
                let mut a = rng.gen_range(0..f.analysts);
                if a == last_analyst {
                    a = (a + 1) % f.analysts;
                }
                last_analyst = a;
                let (name, bank) = &f.analyst_names[a];
                if k > 0 || rng.gen_bool(0.5) {
                    turns.push(Turn::new(Role::Operator, None, &format!("Our next question comes from {name} with {bank}.")));
                }
                let topic = pick(&mut rng, TOPICS);
                let manager = if rng.gen_bool(0.6) { "Chief Executive Officer" } else { "Chief Financial Officer" };
                turns.push(Turn::new(Role::Analyst, Some(name), &question(&mut rng, topic)));
                let is_nor = rng.gen_bool(p_nor);
                let first = if is_nor {
                    nor += 1;
                    {
                        let cue = draw_cue(&mut rng);
                        evasive(&mut rng, cue, topic)
                    }
                } else {
                    answer(&mut rng, topic)
                };
                turns.push(Turn::new(Role::Manager, Some(manager), &first));
                if rng.gen_bool(0.3) {
                    turns.push(Turn::new(Role::Analyst, Some(name), &follow_up(&mut rng)));
                    let second = if is_nor && rng.gen_bool(0.3) {
                        nor += 1;
                        {
                        let cue = draw_cue(&mut rng);
                        evasive(&mut rng, cue, topic)
                    }
                    } else {
                        answer(&mut rng, topic)
                    };
                    turns.push(Turn::new(Role::Manager, Some(manager), &second));
                }
            }
            turns.push(Turn::new(Role::Operator, None, "This concludes the question and answer session."));
            let turns: Vec<Turn> = turns.into_iter().map(|t| t.expect("non-empty turn")).collect();
            let pres = presentation(&mut rng, &f.id, q, tone);
            let t = Transcript::new(&transcript_id, &f.id, q, 2, &pres, turns.clone());
            // Some calls ship an earlier, shorter version as well.
            if fi % 8 == 3 && versioned < opts.quarters && q == quarters[fi % quarters.len()] {
                versioned += 1;
                let cut: Vec<Turn> = turns[..turns.len() / 2].to_vec();
                let old = Transcript::new(&transcript_id, &f.id, q, 1, &pres, cut);
                data.push((format!("transcripts/{transcript_id}_v1.txt"), old.to_document()));
            }
            data.push((format!("transcripts/{transcript_id}_v2.txt"), t.to_document()));
            let eps = f.base_eps + 0.15 * normal(&mut rng) - 0.02 * f64::from(nor);
            calls.push(Call {
                firm: fi,
                quarter: q,
                nor,
                announcement: quarter_end(q).add_days(rng.gen_range(20..45)),
                eps,
                prior_eps,
            });
            prior_eps = eps;
        }
    }
    // One transcript filed under two firms.
    if firms.len() >= 2 {
        let turns = vec![
            Turn::new(Role::Analyst, Some("Alex Walker"), "How is the joint venture performing?").expect("turn"),
            Turn::new(Role::Manager, Some("Chief Executive Officer"), "It is performing well and ahead of plan.").expect("turn"),
        ];
        for f in &firms[firms.len() - 2..] {
            let t = Transcript::new("TR0999", &f.id, quarters[0], 1, "Welcome to the joint venture update.", turns.clone());
            data.push((format!("transcripts/TR0999_{}.txt", f.id), t.to_document()));
        }
    }

    // Daily market series.
    let first_day = quarter_end(quarters[0]).add_days(-40);
    let last_day = quarter_end(*quarters.last().expect("quarters")).add_days(140);
    let days = trading_days(first_day, last_day);
    let market: Vec<f64> = days.iter().map(|_| 0.0003 + 0.01 * normal(&mut rng)).collect();
    let mut by_firm: Vec<Vec<&Call>> = vec![Vec::new(); firms.len()];
    for c in &calls {
        by_firm[c.firm].push(c);
    }
    let mut market_rows = Vec::new();
    // Closing price on or before each quarter end, per firm.
    let mut closes: BTreeMap<(usize, Quarter), f64> = BTreeMap::new();
    for (fi, f) in firms.iter().enumerate() {
        let mut price = f.price0;
        let mut next_call = 0;
        let mut since: Option<(usize, &Call)> = None;
        let fcalls = &by_firm[fi];
        for (di, (&d, &m)) in days.iter().zip(&market).enumerate() {
            while next_call < fcalls.len() && fcalls[next_call].announcement <= d {
                since = Some((0, fcalls[next_call]));
                next_call += 1;
            }
            let (mut vol_mult, mut drift, mut liq) = (1.0, 0.0, 1.0);
            if let Some((k, c)) = since.as_mut() {
                let nor = f64::from(c.nor);
                if (1..=30).contains(k) {
                    vol_mult = 1.0 + 0.12 * nor;
                    liq = 1.0 + 0.10 * nor;
                }
                if (2..=60).contains(k) {
                    let surprise = (c.eps - c.prior_eps).signum();
                    drift = 0.0004 * surprise * (1.0 + 0.2 * nor);
                }
                *k += 1;
            }
            let r = m + drift + f.idio_vol * vol_mult * normal(&mut rng);
            price *= 1.0 + r;
            let vol = (f.base_volume * liq * (0.3 * normal(&mut rng)).exp()).round();
            let half = price * f.spread * liq * (0.1 * normal(&mut rng)).exp() / 2.0;
            for &q in &quarters {
                if d <= quarter_end(q) && days.get(di + 1).is_none_or(|n| *n > quarter_end(q)) {
                    closes.insert((fi, q), price);
                }
            }
            market_rows.push(vec![
                f.id.clone(),
                d.to_string(),
                f6(r),
                f6(m),
                format!("{:.4}", price - half),
                format!("{:.4}", price + half),
                format!("{vol}"),
            ]);
        }
    }

    // Forecasts, fundamentals and incentives.
    let mut summary = Vec::new();
    let mut detail = Vec::new();
    let mut fundamentals = Vec::new();
    let mut incentives = Vec::new();
    let mut missing_price = 0;
    for (ci, c) in calls.iter().enumerate() {
        let f = &firms[c.firm];
        let nor = f64::from(c.nor);
        let close = closes.get(&(c.firm, c.quarter)).copied().unwrap_or(f.price0);
        let n = if ci % 97 == 5 { 1 } else { f.analysts };
        let common = close * (0.001 * f.fe_error + 0.002 * (1.0 + 0.35 * nor) * normal(&mut rng));
        let sd = close * 0.003 * (1.0 + 0.3 * nor);
        let mut pre = Vec::new();
        for j in 0..n {
            let analyst = format!("{}-A{}", f.id, j + 1);
            let eps = c.eps + common + sd * normal(&mut rng);
            let date = c.announcement.add_days(-rng.gen_range(5..60));
            if rng.gen_bool(0.25) {
                let stale = c.eps + common + 2.0 * sd * normal(&mut rng);
                detail.push(vec![f.id.clone(), c.quarter.to_string(), analyst.clone(), date.add_days(-20).to_string(), f6(stale)]);
            }
            detail.push(vec![f.id.clone(), c.quarter.to_string(), analyst.clone(), date.to_string(), f6(eps)]);
            pre.push((eps * 1e6).round() / 1e6);
            if rng.gen_bool(0.7) {
                let mean_gap = 3.0 * (1.0 + 0.3 * nor);
                let gap = (-mean_gap * (1.0 - rng.gen_range(0.0..1.0f64)).ln()).floor() as i64;
                let post = c.eps + close * 0.0015 * (1.0 + 0.3 * nor) * normal(&mut rng);
                detail.push(vec![f.id.clone(), c.quarter.to_string(), analyst, c.announcement.add_days(gap).to_string(), f6(post)]);
            }
        }
        let consensus = pre.iter().sum::<f64>() / pre.len() as f64;
        // One firm-quarter has no forecast summary; three lack a price.
        if ci == 17 {
            continue;
        }
        let price_cell = if ci % 131 == 60 && missing_price < 3 {
            missing_price += 1;
            String::new()
        } else {
            format!("{close:.4}")
        };
        summary.push(vec![
            f.id.clone(),
            c.quarter.to_string(),
            f6(consensus),
            f6(c.eps),
            n.to_string(),
            price_cell,
            c.announcement.to_string(),
        ]);

        let t = (c.quarter.index() - opts.first_quarter.index()) as f64;
        let assets = f.assets * (0.01 * t + 0.02 * normal(&mut rng)).exp();
        let income = c.eps * f.shares * (1.0 + 0.02 * normal(&mut rng));
        let net = income * (1.0 + 0.05 * normal(&mut rng));
        let book = assets * (1.0 - f.lev) * rng.gen_range(0.3..0.7);
        let monthly: Vec<String> = (0..12).map(|_| format!("{:.5}", 0.008 + f.month_vol * normal(&mut rng))).collect();
        let opex = assets * rng.gen_range(0.05..0.15);
        let debt = assets * (f.lev * (1.0 + 0.05 * normal(&mut rng))).max(0.0);
        let rd = opex * (f.rd * (1.0 + 0.1 * normal(&mut rng))).max(0.0);
        let q_ret = rng.gen_range(-0.05..0.08);
        fundamentals.push(vec![
            f.id.clone(),
            c.quarter.to_string(),
            format!("{assets:.3}"),
            format!("{income:.3}"),
            format!("{net:.3}"),
            format!("{debt:.3}"),
            format!("{:.3}", f.shares),
            f6(c.eps),
            f6(c.prior_eps),
            format!("{close:.4}"),
            format!("{:.4}", close * (1.0 + 0.01 * normal(&mut rng))),
            format!("{book:.3}"),
            monthly.join(" "),
            f.segments.to_string(),
            format!("{:.4}", (f.inst + 0.03 * normal(&mut rng)).clamp(0.0, 1.0)),
            format!("{:.3}", f.intangible * (1.0 + 0.02 * normal(&mut rng))),
            format!("{rd:.3}"),
            format!("{opex:.3}"),
            f6(q_ret),
        ]);
        if ci % 23 != 7 {
            for _ in 0..rng.gen_range(1..3) {
                incentives.push(vec![
                    f.id.clone(),
                    c.quarter.to_string(),
                    format!("{:.4}", 8.0 + 0.8 * normal(&mut rng)),
                    format!("{:.4}", 10.0 + 1.5 * normal(&mut rng) + 0.1 * f.evasive),
                ]);
            }
        }
    }
    data.push((
        io::FORECASTS_SUMMARY.into(),
        csv_text(
            &["firm_id", "fiscal_quarter", "consensus_mean_eps", "actual_eps", "analyst_following", "prior_close", "announcement_date"],
            &summary,
        ),
    ));
    data.push((
        io::FORECASTS_DETAIL.into(),
        csv_text(&["firm_id", "fiscal_quarter", "analyst_id", "forecast_date", "eps"], &detail),
    ));
    data.push((
        io::FUNDAMENTALS.into(),
        csv_text(
            &[
                "firm_id",
                "fiscal_quarter",
                "total_assets",
                "income_before_extra",
                "net_income",
                "total_debt",
                "shares_outstanding",
                "eps",
                "prior_eps",
                "prior_close",
                "quarter_price",
                "book_equity",
                "monthly_returns",
                "segments",
                "inst_ownership",
                "intangible_assets",
                "rd_expense",
                "operating_expense",
                "wt_ret",
            ],
            &fundamentals,
        ),
    ));
    data.push((
        io::DAILY_MARKET.into(),
        csv_text(&["firm_id", "date", "ret", "market_ret", "bid", "ask", "volume"], &market_rows),
    ));
    data.push((io::INCENTIVES.into(), csv_text(&["firm_id", "fiscal_quarter", "comp", "lwealth"], &incentives)));
    data.sort();

    let list = |words: &[&str], title: &str| {
        let mut s = format!("# {title}\n");
        for w in words {
            let _ = writeln!(s, "{w}");
        }
        s
    };
    let lexicon = vec![
        ("forward.txt".to_string(), list(FORWARD, "forward-looking terms")),
        ("negative.txt".to_string(), list(NEGATIVE, "negative terms")),
        ("positive.txt".to_string(), list(POSITIVE, "positive terms")),
        ("uncertainty.txt".to_string(), list(UNCERTAIN, "uncertainty terms")),
    ];
    SynthData { data, lexicon }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonanswer_core::elicitor::{classify_answer, CueProfile};

    #[test]
    fn answers_carry_exactly_the_intended_cues() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for topic in TOPICS {
            for _ in 0..20 {
                assert_eq!(classify_answer(&answer(&mut rng, topic), CueProfile::Full), None);
                assert_eq!(classify_answer(&follow_up(&mut rng), CueProfile::Full), None);
                let cue = draw_cue(&mut rng);
                let got = classify_answer(&evasive(&mut rng, cue, topic), CueProfile::Full);
                assert!(got.is_some(), "{cue:?} on {topic}");
            }
        }
    }

    #[test]
    fn deterministic_and_trading_days_skip_weekends() {
        let small = SynthOptions { firms: 3, quarters: 2, ..SynthOptions::default() };
        assert_eq!(generate(&small), generate(&small));
        let d = trading_days(Date::new(2024, 6, 1).unwrap(), Date::new(2024, 6, 9).unwrap());
        assert_eq!(d.len(), 5);
        assert_eq!(d[0], Date::new(2024, 6, 3).unwrap());
        assert_eq!(quarter_end(Quarter::new(2019, 4).unwrap()), Date::new(2019, 12, 31).unwrap());
    }
}
