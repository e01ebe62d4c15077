//! CSV and JSONL files: the input data dictionaries and output writers.
//!
//! Input files (comma separated, header row, UTF-8; empty cells are missing):
//!
//! * `forecasts_summary.csv`: firm_id, fiscal_quarter, consensus_mean_eps,
//!   actual_eps, analyst_following, prior_close, announcement_date
//!   (YYYY-MM-DD), optional forecast_sd.
//! * `forecasts_detail.csv` (optional): firm_id, fiscal_quarter,
//!   analyst_id, forecast_date, eps.
//! * `fundamentals.csv`: firm_id, fiscal_quarter, total_assets,
//!   income_before_extra, net_income, total_debt, shares_outstanding, eps,
//!   prior_eps, prior_close, quarter_price, book_equity, monthly_returns
//!   (space separated), segments, inst_ownership, intangible_assets,
//!   rd_expense, operating_expense, wt_ret.
//! * `daily_market.csv` (optional): firm_id, date, ret, market_ret, bid,
//!   ask, volume.
//! * `incentives.csv` (optional): firm_id, fiscal_quarter, comp, lwealth;
//!   several rows per firm-quarter are averaged.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nonanswer_core::panel::assemble::Incentives;
use nonanswer_core::panel::{DailyObs, DetailForecast, ForecastInputs, Fundamentals};
use nonanswer_core::stats::Frame;
use nonanswer_core::{Date, Quarter};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORECASTS_SUMMARY: &str = "forecasts_summary.csv";
pub const FORECASTS_DETAIL: &str = "forecasts_detail.csv";
pub const FUNDAMENTALS: &str = "fundamentals.csv";
pub const DAILY_MARKET: &str = "daily_market.csv";
pub const INCENTIVES: &str = "incentives.csv";

fn read_records<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let headers = rdr
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .clone();
    let missing: Vec<&str> = required.iter().copied().filter(|c| !headers.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!("{}: missing columns {}", path.display(), missing.join(", "))));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| CliError::data(format!("{}: {e}", path.display()))))
        .collect()
}

fn optional_file(dir: &Path, name: &str) -> Option<PathBuf> {
    let p = dir.join(name);
    p.is_file().then_some(p)
}

#[derive(Debug, Deserialize)]
struct SummaryRecord {
    firm_id: String,
    fiscal_quarter: Quarter,
    consensus_mean_eps: f64,
    actual_eps: f64,
    analyst_following: u32,
    prior_close: Option<f64>,
    announcement_date: Date,
    #[serde(default)]
    forecast_sd: Option<f64>,
}

/// Summary forecasts joined with the detail file. Each analyst's latest
/// estimate issued before the announcement feeds the dispersion.
pub fn load_forecasts(dir: &Path) -> Result<(Vec<ForecastInputs>, Vec<DetailForecast>)> {
    let summary: Vec<SummaryRecord> = read_records(
        &dir.join(FORECASTS_SUMMARY),
        &[
            "firm_id",
            "fiscal_quarter",
            "consensus_mean_eps",
            "actual_eps",
            "analyst_following",
            "prior_close",
            "announcement_date",
        ],
    )?;
    let detail: Vec<DetailForecast> = match optional_file(dir, FORECASTS_DETAIL) {
        Some(p) => read_records(&p, &["firm_id", "fiscal_quarter", "analyst_id", "forecast_date", "eps"])?,
        None => Vec::new(),
    };
    let mut by_key: BTreeMap<(&str, Quarter), Vec<&DetailForecast>> = BTreeMap::new();
    for d in &detail {
        by_key.entry((d.firm_id.as_str(), d.fiscal_quarter)).or_default().push(d);
    }
    let inputs = summary
        .into_iter()
        .map(|s| {
            let mut latest: BTreeMap<&str, &DetailForecast> = BTreeMap::new();
            for d in by_key.get(&(s.firm_id.as_str(), s.fiscal_quarter)).into_iter().flatten() {
                if d.forecast_date < s.announcement_date
                    && latest.get(d.analyst_id.as_str()).is_none_or(|p| p.forecast_date <= d.forecast_date)
                {
                    latest.insert(&d.analyst_id, d);
                }
            }
            ForecastInputs {
                analyst_forecasts: latest.values().map(|d| d.eps).collect(),
                firm_id: s.firm_id,
                fiscal_quarter: s.fiscal_quarter,
                consensus_mean_eps: s.consensus_mean_eps,
                forecast_sd: s.forecast_sd,
                actual_eps: s.actual_eps,
                analyst_following: s.analyst_following,
                prior_close: s.prior_close.unwrap_or(f64::NAN),
                announcement_date: s.announcement_date,
            }
        })
        .collect();
    Ok((inputs, detail))
}

#[derive(Debug, Deserialize)]
struct FundamentalsRecord {
    firm_id: String,
    fiscal_quarter: Quarter,
    total_assets: Option<f64>,
    income_before_extra: Option<f64>,
    net_income: Option<f64>,
    total_debt: Option<f64>,
    shares_outstanding: Option<f64>,
    eps: Option<f64>,
    prior_eps: Option<f64>,
    prior_close: Option<f64>,
    quarter_price: Option<f64>,
    book_equity: Option<f64>,
    #[serde(default)]
    monthly_returns: String,
    segments: Option<f64>,
    inst_ownership: Option<f64>,
    intangible_assets: Option<f64>,
    rd_expense: Option<f64>,
    operating_expense: Option<f64>,
    wt_ret: Option<f64>,
}

pub fn load_fundamentals(dir: &Path) -> Result<Vec<Fundamentals>> {
    let path = dir.join(FUNDAMENTALS);
    let records: Vec<FundamentalsRecord> = read_records(&path, &["firm_id", "fiscal_quarter", "total_assets"])?;
    records
        .into_iter()
        .map(|r| {
            let monthly_returns = r
                .monthly_returns
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::data(format!("{}: monthly_returns of {} {}: {e}", path.display(), r.firm_id, r.fiscal_quarter)))?;
            Ok(Fundamentals {
                firm_id: r.firm_id,
                fiscal_quarter: r.fiscal_quarter,
                total_assets: r.total_assets,
                income_before_extra: r.income_before_extra,
                net_income: r.net_income,
                total_debt: r.total_debt,
                shares_outstanding: r.shares_outstanding,
                eps: r.eps,
                prior_eps: r.prior_eps,
                prior_close: r.prior_close,
                quarter_price: r.quarter_price,
                book_equity: r.book_equity,
                monthly_returns,
                segments: r.segments,
                inst_ownership: r.inst_ownership,
                intangible_assets: r.intangible_assets,
                rd_expense: r.rd_expense,
                operating_expense: r.operating_expense,
                wt_ret: r.wt_ret,
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct MarketRecord {
    firm_id: String,
    date: Date,
    ret: f64,
    market_ret: f64,
    bid: Option<f64>,
    ask: Option<f64>,
    volume: Option<f64>,
}

/// Daily series per firm, sorted by date. `None` when the file is absent.
pub fn load_market(dir: &Path) -> Result<Option<BTreeMap<String, Vec<DailyObs>>>> {
    let Some(path) = optional_file(dir, DAILY_MARKET) else {
        return Ok(None);
    };
    let records: Vec<MarketRecord> = read_records(&path, &["firm_id", "date", "ret", "market_ret"])?;
    let mut out: BTreeMap<String, Vec<DailyObs>> = BTreeMap::new();
    for r in records {
        out.entry(r.firm_id).or_default().push(DailyObs {
            date: r.date,
            ret: r.ret,
            market_ret: r.market_ret,
            bid: r.bid,
            ask: r.ask,
            volume: r.volume,
        });
    }
    for series in out.values_mut() {
        series.sort_by_key(|o| o.date);
    }
    Ok(Some(out))
}

pub fn load_incentives(dir: &Path) -> Result<Option<Vec<Incentives>>> {
    match optional_file(dir, INCENTIVES) {
        Some(p) => Ok(Some(read_records(&p, &["firm_id", "fiscal_quarter", "comp", "lwealth"])?)),
        None => Ok(None),
    }
}

/// Formats a number for output; missing and non-finite values are empty.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes a CSV with the given header and rows (LF line endings).
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?);
    let err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.into_iter()).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes every label column, then every numeric column.
pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let names: Vec<&str> = frame.label_names().chain(frame.numeric_names()).collect();
    let rows = (0..frame.len()).map(|i| {
        names
            .iter()
            .map(|n| frame.cell(n, i).unwrap_or_default())
            .collect::<Vec<_>>()
    });
    write_csv(path, &names, rows)
}

/// Columns read back as labels; every other column is numeric.
pub const LABEL_COLUMNS: [&str; 5] = ["firm_id", "fiscal_quarter", "transcript_id", "analyst_id", "conver_id"];

/// Reads a CSV written by [`write_frame`]. Empty cells become `NaN`.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
    let err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let headers: Vec<String> = rdr.headers().map_err(err)?.iter().map(str::to_string).collect();
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(err)?;
        for (c, v) in cols.iter_mut().zip(rec.iter()) {
            c.push(v.to_string());
        }
    }
    let n = cols.first().map_or(0, Vec::len);
    let mut frame = Frame::new(n);
    for (name, values) in headers.iter().zip(cols) {
        if LABEL_COLUMNS.contains(&name.as_str()) {
            frame.set_label(name, values);
            continue;
        }
        let parsed = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if v.is_empty() {
                    Ok(f64::NAN)
                } else {
                    v.parse::<f64>()
                        .map_err(|_| CliError::data(format!("{}: row {}: `{name}` is not a number: {v}", path.display(), i + 2)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        frame.set_numeric(name, parsed);
    }
    Ok(frame)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a JSONL file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}
