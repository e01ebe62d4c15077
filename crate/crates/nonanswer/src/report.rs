//! Plain-text tables and per-specification result files.

use std::path::Path;

use nonanswer_core::stats::{RegressionResult, StatsError};

use crate::error::Result;
use crate::io;

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Three decimals, or two significant digits in scientific notation for
/// values too small to show.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return "-".into();
    }
    if v != 0.0 && v.abs() < 0.0005 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len().max(rows.iter().map(Vec::len).max().unwrap_or(0));
    let mut width = vec![0usize; cols];
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (i, cell) in row.iter().enumerate() {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, w) in width.iter().enumerate() {
            let cell = row.get(i).map(String::as_str).unwrap_or("");
            if i == 0 {
                s.push_str(&format!("{cell:<w$}"));
            } else {
                s.push_str(&format!("  {cell:>w$}"));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let total: usize = width.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
    let rule = "-".repeat(total) + "\n";
    let mut out = rule.clone();
    out.push_str(&line(header));
    out.push_str(&rule);
    for r in rows {
        out.push_str(&line(r));
    }
    out.push_str(&rule);
    out
}

/// One estimated (or failed) column of a regression table.
#[derive(Debug, Clone)]
pub struct Column {
    pub header: String,
    pub result: std::result::Result<RegressionResult, StatsError>,
}

impl Column {
    pub fn new(header: &str, result: std::result::Result<RegressionResult, StatsError>) -> Column {
        Column {
            header: header.to_string(),
            result,
        }
    }
}

/// Coefficients with stars, t statistics in parentheses below, then the
/// sample rows. `show` limits the coefficient rows; `None` shows all.
/// Failed columns are listed as SKIPPED under the table.
pub fn regression_table(columns: &[Column], show: Option<&[&str]>, extra: &[(String, Vec<String>)]) -> String {
    let ok: Vec<&RegressionResult> = columns.iter().filter_map(|c| c.result.as_ref().ok()).collect();
    let mut terms: Vec<String> = Vec::new();
    for r in &ok {
        for t in &r.terms {
            let wanted = show.is_none_or(|s| s.contains(&t.as_str()));
            if wanted && !terms.contains(t) {
                terms.push(t.clone());
            }
        }
    }
    if let Some(pos) = terms.iter().position(|t| t == "Constant") {
        let c = terms.remove(pos);
        terms.push(c);
    }
    let mut header = vec![String::new()];
    header.extend(columns.iter().enumerate().map(|(i, c)| format!("({}) {}", i + 1, c.header)));
    let mut rows = Vec::new();
    for t in &terms {
        let mut coef = vec![t.clone()];
        let mut tstat = vec![String::new()];
        for c in columns {
            let r = c.result.as_ref().ok();
            match r.and_then(|r| r.coef_of(t).map(|b| (b, r.t_of(t).unwrap_or(f64::NAN), r.p_of(t).unwrap_or(f64::NAN)))) {
                Some((b, _, _)) if b.is_nan() => {
                    coef.push("(omitted)".into());
                    tstat.push(String::new());
                }
                Some((b, tv, p)) => {
                    coef.push(format!("{}{}", fmt_num(b), stars(p)));
                    tstat.push(format!("({tv:.2})"));
                }
                None => {
                    coef.push(String::new());
                    tstat.push(String::new());
                }
            }
        }
        rows.push(coef);
        rows.push(tstat);
    }
    let footer = |label: &str, f: &dyn Fn(&RegressionResult) -> String| {
        let mut row = vec![label.to_string()];
        row.extend(columns.iter().map(|c| c.result.as_ref().map(f).unwrap_or_else(|_| "SKIPPED".into())));
        row
    };
    // Fixed-effect dummies of likelihood models are named like `firm[F001]`.
    let hidden = |r: &RegressionResult| r.terms.iter().any(|t| !terms.contains(t) && !t.contains('['));
    if show.is_some() && ok.iter().any(|r| hidden(r)) {
        rows.push(footer("Other controls", &|r| if hidden(r) { "Yes" } else { "No" }.into()));
    }
    rows.push(footer("Firm FE", &|r| if r.fixed_effects.firm { "Yes" } else { "No" }.into()));
    rows.push(footer("Quarter FE", &|r| if r.fixed_effects.quarter { "Yes" } else { "No" }.into()));
    rows.push(footer("Observations", &|r| r.n_obs.to_string()));
    rows.push(footer("Clusters", &|r| r.n_clusters.map(|g| g.to_string()).unwrap_or_else(|| "-".into())));
    rows.push(footer("Adj. R2 / Pseudo R2", &|r| match r.pseudo_r2 {
        Some(p) => format!("{p:.3}"),
        None => format!("{:.3}", r.adj_r2),
    }));
    for (label, cells) in extra {
        let mut row = vec![label.clone()];
        row.extend(cells.iter().cloned());
        rows.push(row);
    }
    let mut out = text_table(&header, &rows);
    for (i, c) in columns.iter().enumerate() {
        if let Ok(r) = &c.result {
            if !r.omitted.is_empty() {
                out.push_str(&format!("Omitted as collinear in column ({}): {}\n", i + 1, r.omitted.join(", ")));
            }
        }
        if let Err(e) = &c.result {
            out.push_str(&format!("SKIPPED: column ({}) {}: {e}\n", i + 1, c.header));
        }
    }
    out
}

pub const RESULT_HEADER: [&str; 16] = [
    "spec",
    "dependent",
    "term",
    "coef",
    "se",
    "t",
    "p",
    "stars",
    "n_obs",
    "n_clusters",
    "r2",
    "adj_r2",
    "within_r2",
    "pseudo_r2",
    "fixed_effects",
    "se_kind",
];

/// Rows of `results_<spec>.csv`, one per term.
pub fn result_rows(r: &RegressionResult) -> Vec<Vec<String>> {
    let fe = match (r.fixed_effects.firm, r.fixed_effects.quarter) {
        (true, true) => "firm+quarter",
        (true, false) => "firm",
        (false, true) => "quarter",
        (false, false) => "none",
    };
    (0..r.terms.len())
        .map(|i| {
            vec![
                r.name.clone(),
                r.dependent.clone(),
                r.terms[i].clone(),
                io::num(r.coef[i]),
                io::num(r.se[i]),
                io::num(r.t[i]),
                io::num(r.p[i]),
                stars(r.p[i]).to_string(),
                r.n_obs.to_string(),
                r.n_clusters.map(|g| g.to_string()).unwrap_or_default(),
                io::num(r.r2),
                io::num(r.adj_r2),
                io::num(r.within_r2),
                io::opt(r.pseudo_r2),
                fe.to_string(),
                format!("{:?}", r.se_kind),
            ]
        })
        .collect()
}

pub fn write_result(dir: &Path, r: &RegressionResult) -> Result<std::path::PathBuf> {
    let path = dir.join(format!("results_{}.csv", r.name));
    io::write_csv(&path, &RESULT_HEADER, result_rows(r))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonanswer_core::stats::{fe_ols, Frame, RegressionSpec};

    fn fitted() -> RegressionResult {
        let n = 40;
        let mut f = Frame::new(n);
        let x: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + ((i * 13) % 5) as f64).collect();
        f.set_numeric("x", x);
        f.set_numeric("y", y);
        f.set_label("firm_id", (0..n).map(|i| format!("F{}", i % 8)).collect());
        f.set_label("fiscal_quarter", (0..n).map(|i| format!("Q{}", i / 8)).collect());
        fe_ols(&RegressionSpec::new("demo", "y", &["x"]).with_winsorize(None), &f).unwrap()
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.1), "");
    }

    #[test]
    fn table_lists_skipped_columns() {
        let cols = vec![
            Column::new("y", Ok(fitted())),
            Column::new("z", Err(StatsError::MissingColumn("z".into()))),
        ];
        let t = regression_table(&cols, Some(&["x"]), &[]);
        assert!(t.contains("x "));
        assert!(t.contains("***"));
        assert!(t.contains("SKIPPED: column (2) z: column `z` not found"));
        assert!(t.contains("Observations"));
    }

    #[test]
    fn result_csv_has_one_row_per_term() {
        let r = fitted();
        let rows = result_rows(&r);
        assert_eq!(rows.len(), r.terms.len());
        assert_eq!(rows[0][2], "x");
        assert_eq!(rows[0].len(), RESULT_HEADER.len());
    }
}
