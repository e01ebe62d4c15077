//! Report families. Each family renders to `reports/<name>.txt` with CSV
//! companions next to it; regressions also land in
//! `results/results_<spec>.csv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nonanswer_core::elicitor::{Category, NorAnnotation};
use nonanswer_core::measures::{all_quarter_ratios, category_tally, CallMeasures, NorDistribution, Overlap};
use nonanswer_core::panel::controls::{BASELINE_CONTROLS, PEAD_CONTROLS};
use nonanswer_core::panel::winsor::{percentile_sorted, winsorize, winsorize_by_group};
use nonanswer_core::stats::bootstrap::mean_replicate;
use nonanswer_core::stats::permutation::{permutation_result, permutation_setup, permuted_abs_diff};
use nonanswer_core::stats::spec::{pead_spec, validate_pead, FixedEffects, QR_UEPS};
use nonanswer_core::stats::{
    describe, fe_ols, logit, two_sample_t, BootstrapResult, Cmp, Frame, MatchRatio, PermutationResult, RegressionResult,
    RegressionSpec, SeKind, StatsError, Winsorize,
};
use rayon::prelude::*;

use crate::config::{Estimator, FeChoice, RunConfig, Seeds, SpecEntry, SpecLevel, VolumeTransform};
use crate::error::Result;
use crate::io;
use crate::report::{fmt_num, regression_table, stars, text_table, write_result, Column};

pub const REPORTS_DIR: &str = "reports";
pub const RESULTS_DIR: &str = "results";

pub struct Family {
    pub name: &'static str,
    pub title: &'static str,
    /// Command that writes it.
    pub command: &'static str,
}

pub const FAMILIES: [Family; 13] = [
    Family { name: "table1_nor_distribution", title: "Non-responses identified by each model", command: "measure" },
    Family { name: "table2_summary_statistics", title: "Summary statistics", command: "regress" },
    Family { name: "table3_baseline", title: "Non-responses and analyst forecasts", command: "regress" },
    Family { name: "table4_classification", title: "Types and evaluations of responses", command: "regress" },
    Family { name: "table5_robustness", title: "Robustness", command: "regress" },
    Family { name: "table6_mo_inst", title: "Firm complexity and institutional ownership", command: "regress" },
    Family { name: "table7_hrd_covid", title: "R&D intensity and the COVID-19 period", command: "regress" },
    Family { name: "table8_pead_uncertainty", title: "Drift and information uncertainty", command: "regress" },
    Family { name: "oa_table1_quarterly_ratios", title: "Quarterly non-response ratios", command: "measure" },
    Family { name: "oa_table2_match_ratio", title: "Stability of repeated identifications", command: "stability" },
    Family { name: "oa_table3_motivations", title: "Conversation-level determinants of non-responses", command: "regress" },
    Family { name: "figure_overlap", title: "Overlap of non-responses across models", command: "overlap" },
    Family { name: "figure_bootstrap", title: "Bootstrap distributions of quarterly ratios", command: "bootstrap" },
];

pub const USER_SPECS: &str = "user_specs";

pub fn family(name: &str) -> Option<&'static Family> {
    FAMILIES.iter().find(|f| f.name == name)
}

#[derive(Debug, Clone, Default)]
pub struct Csv {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(file: &str, header: &[&str]) -> Csv {
        Csv {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub name: String,
    pub title: String,
    pub text: String,
    pub csvs: Vec<Csv>,
    pub results: Vec<RegressionResult>,
    pub seeds: BTreeMap<String, u64>,
}

impl Report {
    pub fn new(name: &str) -> Report {
        Report {
            name: name.to_string(),
            title: family(name).map(|f| f.title).unwrap_or("User-declared specifications").to_string(),
            ..Report::default()
        }
    }

    pub fn skipped(name: &str, reason: &str) -> Report {
        let mut r = Report::new(name);
        r.text = format!("SKIPPED: {reason}\n");
        r
    }

    pub fn is_skipped(&self) -> bool {
        self.text.starts_with("SKIPPED:")
    }

    pub fn section(&mut self, heading: &str, body: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        if !heading.is_empty() {
            self.text.push_str(heading);
            self.text.push('\n');
        }
        self.text.push_str(body);
    }

    pub fn regressions(&mut self, heading: &str, columns: Vec<Column>, show: Option<&[&str]>, extra: &[(String, Vec<String>)]) {
        let table = regression_table(&columns, show, extra);
        self.results.extend(columns.into_iter().filter_map(|c| c.result.ok()));
        self.section(heading, &table);
    }

    /// Writes the text, the CSVs and one result file per regression.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let reports = out.join(REPORTS_DIR);
        let mut written = Vec::new();
        let path = reports.join(format!("{}.txt", self.name));
        let mut text = format!("{}\n{}\n\n", self.title, "=".repeat(self.title.chars().count()));
        text.push_str(&self.text);
        io::write_text(&path, &text)?;
        written.push(path);
        for c in &self.csvs {
            let p = reports.join(&c.file);
            let header: Vec<&str> = c.header.iter().map(String::as_str).collect();
            io::write_csv(&p, &header, c.rows.iter().cloned())?;
            written.push(p);
        }
        for r in &self.results {
            written.push(write_result(&out.join(RESULTS_DIR), r)?);
        }
        Ok(written)
    }
}

/// Status of every family, from what is on disk.
pub fn write_index(out: &Path, with_user_specs: bool) -> Result<PathBuf> {
    let reports = out.join(REPORTS_DIR);
    let mut rows = Vec::new();
    let names = FAMILIES
        .iter()
        .map(|f| (f.name, f.command))
        .chain(with_user_specs.then_some((USER_SPECS, "regress")));
    for (name, command) in names {
        let path = reports.join(format!("{name}.txt"));
        let status = match std::fs::read_to_string(&path) {
            Ok(text) => {
                let body: Vec<&str> = text.lines().skip(3).collect();
                let skipped = body.iter().filter(|l| l.starts_with("SKIPPED")).count();
                match body.first() {
                    Some(first) if first.starts_with("SKIPPED:") => first.to_string(),
                    _ if skipped > 0 => format!("written, {skipped} SKIPPED line(s)"),
                    _ => "written".to_string(),
                }
            }
            Err(_) => format!("not generated; run `{command}`"),
        };
        rows.push(vec![format!("{name}.txt"), status]);
    }
    let path = reports.join("index.txt");
    io::write_text(&path, &text_table(&["Report".into(), "Status".into()], &rows))?;
    Ok(path)
}

const DEPS: [&str; 3] = ["Error", "Dispersion", "Uncertainty"];

/// Estimation settings shared by every regression family.
#[derive(Debug, Clone)]
pub struct Estimation {
    pub se: SeKind,
    pub winsor: Option<Winsorize>,
    pub permutations: usize,
    pub seeds: Seeds,
    pub volume: VolumeTransform,
}

impl Estimation {
    pub fn from_config(cfg: &RunConfig) -> Estimation {
        let s = &cfg.stats;
        Estimation {
            se: s.se_kind(),
            winsor: Some(Winsorize {
                lower: s.winsor_lower,
                upper: s.winsor_upper,
                by: s.winsor_by_quarter.then(|| "fiscal_quarter".to_string()),
            }),
            permutations: s.permutations,
            seeds: cfg.seeds.clone(),
            volume: s.volume,
        }
    }

    pub fn spec(&self, name: &str, dep: &str, regs: &[&str]) -> RegressionSpec {
        RegressionSpec::new(name, dep, regs)
            .with_se(self.se)
            .with_winsorize(self.winsor.clone())
    }

    /// Winsorizes a continuous column the way the regressions do.
    fn winsorized(&self, values: &[f64], quarters: Option<&[String]>) -> Vec<f64> {
        let Some(w) = &self.winsor else {
            return values.to_vec();
        };
        if is_binary(values) {
            return values.to_vec();
        }
        match (w.by.is_some(), quarters) {
            (true, Some(q)) => winsorize_by_group(values, q, w.lower, w.upper),
            _ => winsorize(values, w.lower, w.upper),
        }
    }
}

fn is_binary(values: &[f64]) -> bool {
    values.iter().filter(|v| v.is_finite()).all(|&v| v == 0.0 || v == 1.0)
}

fn has_values(frame: &Frame, col: &str) -> bool {
    frame.numeric(col).is_some_and(|v| v.iter().any(|x| x.is_finite()))
}

fn with_controls<'a>(main: &[&'a str], controls: bool) -> Vec<&'a str> {
    let mut v = main.to_vec();
    if controls {
        v.extend(BASELINE_CONTROLS);
    }
    v
}

fn slug(s: &str) -> String {
    s.to_ascii_lowercase().replace(|c: char| !c.is_ascii_alphanumeric(), "_")
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Frames the regression families read.
#[derive(Debug, Clone)]
pub struct Frames {
    pub panel: Frame,
    /// Analyst-level rows with the panel's columns joined by firm-quarter.
    pub individual: Option<Frame>,
    pub conversation: Option<Frame>,
}

/// Adds every panel column missing from `rows`, matched on firm and
/// quarter.
pub fn join_panel(rows: &Frame, panel: &Frame) -> Frame {
    let key = |f: &Frame, i: usize| {
        (
            f.label("firm_id").map(|l| l[i].clone()).unwrap_or_default(),
            f.label("fiscal_quarter").map(|l| l[i].clone()).unwrap_or_default(),
        )
    };
    let index: BTreeMap<(String, String), usize> = (0..panel.len()).map(|i| (key(panel, i), i)).collect();
    let at: Vec<Option<usize>> = (0..rows.len()).map(|i| index.get(&key(rows, i)).copied()).collect();
    let mut out = rows.clone();
    for name in panel.numeric_names() {
        if out.has(name) {
            continue;
        }
        let col = panel.numeric(name).expect("listed column");
        out.set_numeric(name, at.iter().map(|i| i.map_or(f64::NAN, |i| col[i])).collect());
    }
    out
}

fn describe_rows(est: &Estimation, frame: &Frame, vars: &[&str], missing: &mut Vec<String>) -> Vec<Vec<String>> {
    let quarters = frame.label("fiscal_quarter");
    let mut rows = Vec::new();
    for v in vars {
        let Some(values) = frame.numeric(v).filter(|_| has_values(frame, v)) else {
            missing.push(v.to_string());
            continue;
        };
        let d = describe(&est.winsorized(values, quarters));
        rows.push(
            [v.to_string(), d.n.to_string()]
                .into_iter()
                .chain([d.mean, d.sd, d.min, d.p25, d.median, d.p75, d.max].map(fmt_num))
                .collect(),
        );
    }
    rows
}

const DESCRIBE_HEADER: [&str; 9] = ["Variable", "N", "Mean", "SD", "Min", "P25", "Median", "P75", "Max"];

pub fn table2(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table2_summary_statistics");
    let header: Vec<String> = DESCRIBE_HEADER.iter().map(|s| s.to_string()).collect();
    let mut csv = Csv::new("table2_summary_statistics.csv", &[&["Panel"], &DESCRIBE_HEADER[..]].concat());
    let conv = frames.conversation.as_ref();
    let ind = frames.individual.as_ref();
    let panels: [(&str, Option<&Frame>, Vec<&str>); 6] = [
        ("Panel A: Non-responses (calls)", Some(&frames.panel), vec!["NOR_Firm", "NOR_F"]),
        ("Panel A: Non-responses (conversations)", conv, vec!["NOR_Con", "NOR_C"]),
        ("Panel B: Analyst forecast features", Some(&frames.panel), DEPS.to_vec()),
        ("Panel B: Individual analysts", ind, vec!["Error_Individual", "Time_Individual"]),
        ("Panel C: Control variables", Some(&frames.panel), BASELINE_CONTROLS.to_vec()),
        (
            "Panel D: Other variables",
            Some(&frames.panel),
            vec![
                "Mscore", "Quantity", "Relevance", "Clarity", "SquError", "SquUncertainty", "BM", "Num_Ana", "Wt_Ret",
                "Rd_Exp", "CAR_2_60", "BHAR_2_60", "Ret_Sd", "Volume", "Volume_Raw", "Spread", "Comp", "Lwealth",
            ],
        ),
    ];
    for (heading, frame, vars) in panels {
        let Some(frame) = frame else {
            rep.section(heading, "SKIPPED: level not available; run `panel` with annotations and forecast detail\n");
            continue;
        };
        let mut missing = Vec::new();
        let rows = describe_rows(est, frame, &vars, &mut missing);
        let mut body = text_table(&header, &rows);
        if !missing.is_empty() {
            body.push_str(&format!("SKIPPED: no data for {}\n", missing.join(", ")));
        }
        let tag = heading.split(':').next().unwrap_or(heading);
        csv.rows.extend(rows.into_iter().map(|r| std::iter::once(tag.to_string()).chain(r).collect()));
        rep.section(heading, &body);
    }

    // Univariate comparison by NOR_F.
    let mut rows = Vec::new();
    let mut t_csv = Csv::new("table2_panel_e.csv", &["Variable", "Mean_NOR_F_0", "Mean_NOR_F_1", "Diff", "t", "p"]);
    let quarters = frames.panel.label("fiscal_quarter");
    match frames.panel.numeric("NOR_F") {
        Some(nor_f) => {
            for v in DEPS.iter().chain(BASELINE_CONTROLS.iter()) {
                let Some(values) = frames.panel.numeric(v) else { continue };
                let w = est.winsorized(values, quarters);
                let pick = |flag: f64| -> Vec<f64> {
                    w.iter().zip(nor_f).filter(|(x, f)| x.is_finite() && **f == flag).map(|(x, _)| *x).collect()
                };
                match two_sample_t(&pick(1.0), &pick(0.0)) {
                    Ok(t) => {
                        rows.push(vec![
                            v.to_string(),
                            fmt_num(t.mean_b),
                            fmt_num(t.mean_a),
                            format!("{}{}", fmt_num(t.mean_diff), stars(t.p)),
                            format!("{:.2}", t.t_stat),
                            format!("{:.3}", t.p),
                        ]);
                        t_csv.rows.push(vec![
                            v.to_string(),
                            io::num(t.mean_b),
                            io::num(t.mean_a),
                            io::num(t.mean_diff),
                            io::num(t.t_stat),
                            io::num(t.p),
                        ]);
                    }
                    Err(e) => rows.push(vec![v.to_string(), format!("SKIPPED: {e}")]),
                }
            }
            let header: Vec<String> = ["Variable", "NOR_F=0", "NOR_F=1", "Diff (1-0)", "t", "p"].map(String::from).to_vec();
            rep.section("Panel E: Univariate comparison by NOR_F (Welch t-test)", &text_table(&header, &rows));
        }
        None => rep.section("Panel E: Univariate comparison by NOR_F", "SKIPPED: NOR_F missing from the panel\n"),
    }
    rep.csvs.push(csv);
    rep.csvs.push(t_csv);
    rep
}

pub fn table3(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table3_baseline");
    let mut cols = Vec::new();
    for dep in DEPS {
        for ctl in [false, true] {
            let name = format!("t3_{}_{}", slug(dep), if ctl { "controls" } else { "nor" });
            cols.push(Column::new(dep, fe_ols(&est.spec(&name, dep, &with_controls(&["NOR_Firm"], ctl)), &frames.panel)));
        }
    }
    rep.regressions("", cols, None, &[]);
    rep
}

pub fn table4(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table4_classification");
    let panels: [(&str, &str, Vec<&str>); 3] = [
        ("Panel A: Classifications of non-responses", "t4a", vec!["Refusal", "Irrelevant", "Recall", "Lack", "Legal"]),
        ("Panel B: Average evaluation of responses", "t4b", vec!["Mscore"]),
        ("Panel C: Separate evaluations of responses", "t4c", vec!["Relevance", "Quantity", "Clarity"]),
    ];
    for (heading, tag, main) in panels {
        let cols = DEPS
            .iter()
            .map(|dep| {
                let name = format!("{tag}_{}", slug(dep));
                Column::new(dep, fe_ols(&est.spec(&name, dep, &with_controls(&main, true)), &frames.panel))
            })
            .collect();
        rep.regressions(heading, cols, Some(&main), &[]);
    }
    rep
}

pub fn table5(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table5_robustness");
    let p = &frames.panel;
    let three = |tag: &str, main: &[&str], extra: &[&str]| -> Vec<Column> {
        DEPS.iter()
            .map(|dep| {
                let mut regs = with_controls(main, true);
                regs.extend_from_slice(extra);
                Column::new(dep, fe_ols(&est.spec(&format!("{tag}_{}", slug(dep)), dep, &regs), p))
            })
            .collect()
    };
    if has_values(p, "NOR_Firm_Alt") {
        rep.regressions("Panel A: Non-responses from the alternative model", three("t5a", &["NOR_Firm_Alt"], &[]), Some(&["NOR_Firm_Alt"]), &[]);
    } else {
        rep.section("Panel A: Non-responses from the alternative model", "SKIPPED: no alternative-model annotations; run `annotate --model both`\n");
    }
    rep.regressions("Panel B: Indicator for non-responses", three("t5b", &["NOR_F"], &[]), Some(&["NOR_F"]), &[]);
    let cols = ["SquError", "SquUncertainty"]
        .iter()
        .map(|dep| Column::new(dep, fe_ols(&est.spec(&format!("t5c_{}", slug(dep)), dep, &with_controls(&["NOR_Firm"], true)), p)))
        .collect();
    rep.regressions("Panel C: Squared forecast error and uncertainty", cols, Some(&["NOR_Firm"]), &[]);
    match &frames.individual {
        Some(ind) => {
            let mut cols = Vec::new();
            for dep in ["Error_Individual", "Time_Individual"] {
                for ctl in [false, true] {
                    let name = format!("t5d_{}_{}", slug(dep), if ctl { "controls" } else { "nor" });
                    cols.push(Column::new(dep, fe_ols(&est.spec(&name, dep, &with_controls(&["NOR_Firm"], ctl)), ind)));
                }
            }
            rep.regressions("Panel D: Individual analysts", cols, Some(&["NOR_Firm"]), &[]);
        }
        None => rep.section("Panel D: Individual analysts", "SKIPPED: no individual forecasts; forecasts_detail.csv is absent\n"),
    }
    if has_values(p, "Comp") && has_values(p, "Lwealth") {
        rep.regressions(
            "Panel E: Managerial incentives",
            three("t5e", &["NOR_Firm"], &["Comp", "Lwealth"]),
            Some(&["NOR_Firm", "Comp", "Lwealth"]),
            &[],
        );
    } else {
        rep.section("Panel E: Managerial incentives", "SKIPPED: incentives.csv is absent or empty\n");
    }
    rep
}

/// Permutation test of the NOR_Firm coefficient across `partition`.
/// Iterations run in parallel and are merged in order.
pub fn permutation(spec: &RegressionSpec, frame: &Frame, partition: &str, n_perm: usize, seed: u64) -> Result<PermutationResult, StatsError> {
    let setup = permutation_setup(spec, frame, partition, "NOR_Firm")?;
    let permuted = (0..n_perm as u64)
        .into_par_iter()
        .map(|i| permuted_abs_diff(&setup, spec, seed, i))
        .collect::<Result<Vec<f64>, StatsError>>()?;
    permutation_result(&setup, spec, partition, &permuted, seed)
}

const PERM_HEADER: [&str; 9] =
    ["partition", "dependent", "coef_1", "coef_0", "observed_diff", "p_two_sided", "n_perm", "seed", "status"];

fn split_panels(rep: &mut Report, frames: &Frames, est: &Estimation, tag: &str, panels: [(&str, &str); 2]) {
    let mut csv = Csv::new(&format!("{}_permutation.csv", rep.name), &PERM_HEADER);
    for (heading, part) in panels {
        if !has_values(&frames.panel, part) {
            rep.section(heading, &format!("SKIPPED: partition `{part}` has no values\n"));
            continue;
        }
        let mut cols = Vec::new();
        let mut p_row = Vec::new();
        let mut notes = String::new();
        for dep in DEPS {
            let base = est.spec(&format!("{tag}_{}_{}", slug(part), slug(dep)), dep, &with_controls(&["NOR_Firm"], true));
            for v in [1.0, 0.0] {
                let mut s = base.clone().with_filter(part, Cmp::Eq, v);
                s.name = format!("{}_{}", base.name, v as u8);
                cols.push(Column::new(&format!("{dep} {part}={v}"), fe_ols(&s, &frames.panel)));
            }
            let purpose = format!("permutation/{part}/{dep}");
            let seed = est.seeds.derive(&purpose);
            rep.seeds.insert(purpose, seed);
            match permutation(&base, &frames.panel, part, est.permutations, seed) {
                Ok(r) => {
                    p_row.push(format!("{:.4}", r.p_two_sided));
                    csv.rows.push(vec![
                        part.to_string(),
                        dep.to_string(),
                        io::num(r.coef_1),
                        io::num(r.coef_0),
                        io::num(r.observed_diff),
                        io::num(r.p_two_sided),
                        r.n_perm.to_string(),
                        r.seed.to_string(),
                        "ok".into(),
                    ]);
                }
                Err(e) => {
                    p_row.push("SKIPPED".into());
                    notes.push_str(&format!("SKIPPED: permutation test for {dep}: {e}\n"));
                    let mut row = vec![part.to_string(), dep.to_string()];
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.extend([seed.to_string(), format!("SKIPPED: {e}")]);
                    csv.rows.push(row);
                }
            }
            p_row.push(String::new());
        }
        let extra = [(format!("Permutation p, diff. in NOR_Firm ({} draws)", est.permutations), p_row)];
        rep.regressions(heading, cols, Some(&["NOR_Firm"]), &extra);
        rep.text.push_str(&notes);
    }
    rep.csvs.push(csv);
}

pub fn table6(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table6_mo_inst");
    split_panels(&mut rep, frames, est, "t6", [("Panel A: Firm complexity", "MO"), ("Panel B: Institutional ownership", "Inst")]);
    rep
}

pub fn table7(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table7_hrd_covid");
    split_panels(&mut rep, frames, est, "t7", [("Panel A: R&D intensity", "H_RD"), ("Panel B: COVID-19 period", "COVID")]);
    rep
}

pub fn table8(frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new("table8_pead_uncertainty");
    let p = &frames.panel;
    let drift = ["CAR_2_60", "BHAR_2_60"];
    if drift.iter().all(|d| has_values(p, d)) {
        let mut cols = Vec::new();
        for dep in drift {
            let s = est.spec(&format!("t8a_{}_qr", slug(dep)), dep, &[QR_UEPS]);
            cols.push(Column::new(dep, fe_ols(&s, p)));
        }
        for dep in drift {
            let s = pead_spec(&format!("t8a_{}_full", slug(dep)), dep, "NOR_Firm", &PEAD_CONTROLS, true)
                .with_se(est.se)
                .with_winsorize(est.winsor.clone());
            let fit = validate_pead(&s, "NOR_Firm").and_then(|_| fe_ols(&s, p));
            cols.push(Column::new(dep, fit));
        }
        let nor_x = format!("{QR_UEPS}:NOR_Firm");
        rep.regressions(
            "Panel A: Post-announcement drift",
            cols,
            Some(&[QR_UEPS, nor_x.as_str(), "NOR_Firm", "Constant"]),
            &[],
        );
    } else {
        rep.section("Panel A: Post-announcement drift", "SKIPPED: no drift outcomes; daily_market.csv is absent\n");
    }
    let volume = match est.volume {
        VolumeTransform::Log => "Volume",
        VolumeTransform::Raw => "Volume_Raw",
    };
    let proxies = ["Ret_Sd", volume, "Spread"];
    if proxies.iter().any(|d| has_values(p, d)) {
        let mut cols = Vec::new();
        for dep in proxies {
            for ctl in [false, true] {
                let name = format!("t8b_{}_{}", slug(dep), if ctl { "controls" } else { "nor" });
                cols.push(Column::new(dep, fe_ols(&est.spec(&name, dep, &with_controls(&["NOR_Firm"], ctl)), p)));
            }
        }
        rep.regressions("Panel B: Information uncertainty", cols, Some(&["NOR_Firm", "Constant"]), &[]);
    } else {
        rep.section("Panel B: Information uncertainty", "SKIPPED: no uncertainty proxies; daily_market.csv is absent\n");
    }
    rep
}

pub const MOTIVATION_REGRESSORS: [&str; 13] = [
    "Word", "Order", "Quantity", "Relevance", "Clarity", "Tone_Q", "Forward_Q", "Read_Q", "Uncert_Q", "Rd_Exp", "Size", "Roa", "Loss",
];

/// Rows whose firm shows variation in `dep`; firm dummies of the others
/// would diverge.
fn varying_firms(frame: &Frame, dep: &str) -> Option<(Frame, usize)> {
    let y = frame.numeric(dep)?;
    let firms = frame.label("firm_id")?;
    let mut seen: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for (v, f) in y.iter().zip(firms) {
        if v.is_finite() {
            let e = seen.entry(f).or_default();
            if *v == 0.0 {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
    }
    let keep: Vec<usize> = (0..frame.len())
        .filter(|&i| y[i].is_finite() && seen.get(firms[i].as_str()).is_some_and(|(a, b)| *a && *b))
        .collect();
    let dropped_firms = seen.values().filter(|(a, b)| !(*a && *b)).count();
    Some((frame.take(&keep), dropped_firms))
}

pub fn oa_table3(frames: &Frames, est: &Estimation) -> Report {
    let name = "oa_table3_motivations";
    let Some(conv) = &frames.conversation else {
        return Report::skipped(name, "no conversation panel; run `panel`");
    };
    let mut rep = Report::new(name);
    let deps = [("NOR_C", "primary"), ("NOR_C_Alt", "alternative")];
    let mut cols = Vec::new();
    let mut notes = Vec::new();
    for (dep, model) in deps {
        let header = format!("Logit {dep}");
        if !has_values(conv, dep) {
            cols.push(Column::new(&header, Err(StatsError::MissingColumn(dep.to_string()))));
            continue;
        }
        let (sub, dropped) = varying_firms(conv, dep).expect("columns checked");
        if dropped > 0 {
            notes.push(format!("Logit on {dep} ({model} model) drops {dropped} firm(s) without variation in the outcome."));
        }
        let s = est.spec(&format!("oa3_logit_{}", slug(dep)), dep, &MOTIVATION_REGRESSORS);
        cols.push(Column::new(&header, logit(&s, &sub)));
    }
    for (dep, _) in deps {
        let header = format!("OLS {dep}");
        let fit = if has_values(conv, dep) {
            fe_ols(&est.spec(&format!("oa3_ols_{}", slug(dep)), dep, &MOTIVATION_REGRESSORS), conv)
        } else {
            Err(StatsError::MissingColumn(dep.to_string()))
        };
        cols.push(Column::new(&header, fit));
    }
    let show: Vec<&str> = MOTIVATION_REGRESSORS.iter().copied().chain(["Constant"]).collect();
    rep.regressions("", cols, Some(&show), &[]);
    for n in notes {
        rep.text.push_str(&n);
        rep.text.push('\n');
    }
    rep
}

/// Annotations and call measures of one model.
#[derive(Debug, Clone, Copy)]
pub struct ModelMeasures<'a> {
    pub role: &'a str,
    pub model_id: &'a str,
    pub annotations: &'a [NorAnnotation],
    pub calls: &'a [CallMeasures],
}

pub fn table1(models: &[ModelMeasures<'_>]) -> Report {
    let mut rep = Report::new("table1_nor_distribution");
    let mut csv = Csv::new(
        "table1_nor_distribution.csv",
        &["model", "role", "nor_0", "nor_1", "nor_2", "nor_3", "error", "total", "nor_conversations", "nor_sum", "refusal", "lack", "legal", "recall", "irrelevant", "other"],
    );
    let mut a_rows = Vec::new();
    let mut b_rows = Vec::new();
    for m in models {
        let d = NorDistribution::from_annotations(m.annotations);
        let c = category_tally(m.annotations);
        let mut row = vec![m.model_id.to_string()];
        row.extend(d.counts.iter().map(u64::to_string));
        row.extend([d.errors, d.total(), d.nor_conversations(), d.nor_sum()].map(|v| v.to_string()));
        row.push(pct(d.nor_c_ratio()));
        a_rows.push(row);
        let cats = [
            Category::Refusal,
            Category::LackOfInfo,
            Category::LegalAffairs,
            Category::Recall,
            Category::Irrelevant,
            Category::Other(String::new()),
        ];
        let mut row = vec![m.model_id.to_string()];
        row.extend(cats.iter().map(|k| c.get(k).to_string()));
        row.push(c.total().to_string());
        b_rows.push(row);
        let mut line = vec![m.model_id.to_string(), m.role.to_string()];
        line.extend(d.counts.iter().map(u64::to_string));
        line.extend([d.errors, d.total(), d.nor_conversations(), d.nor_sum()].map(|v| v.to_string()));
        line.extend(cats.iter().map(|k| c.get(k).to_string()));
        csv.rows.push(line);
    }
    let h = |cols: &[&str]| cols.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    rep.section(
        "Panel A: Numbers of non-responses per conversation",
        &text_table(&h(&["Model", "0", "1", "2", "3", "ERROR", "Total", "With NOR", "NOR sum", "NOR_C ratio"]), &a_rows),
    );
    rep.section(
        "Panel B: Types of non-responses",
        &text_table(&h(&["Model", "Refusal", "Lack", "Legal", "Recall", "Irrelevant", "Other", "Total"]), &b_rows),
    );
    let mut s_csv = Csv::new("table1_scores.csv", &[&["model", "score"], &DESCRIBE_HEADER[1..]].concat());
    for (k, m) in models.iter().enumerate() {
        let mut rows = Vec::new();
        let scores: [(&str, fn(&NorAnnotation) -> Option<u8>); 3] =
            [("Quantity", |a| a.quantity), ("Relevance", |a| a.relevance), ("Clarity", |a| a.clarity)];
        for (label, get) in scores {
            let v: Vec<f64> = m.annotations.iter().filter(|a| !a.is_error()).filter_map(get).map(f64::from).collect();
            let d = describe(&v);
            let cells: Vec<String> = [label.to_string(), d.n.to_string()]
                .into_iter()
                .chain([d.mean, d.sd, d.min, d.p25, d.median, d.p75, d.max].map(fmt_num))
                .collect();
            s_csv.rows.push(std::iter::once(m.model_id.to_string()).chain(cells.iter().cloned()).collect());
            rows.push(cells);
        }
        let panel = (b'C' + k as u8) as char;
        rep.section(
            &format!("Panel {panel}: Evaluations of responses, {} ({})", m.model_id, m.role),
            &text_table(&h(&DESCRIBE_HEADER), &rows),
        );
    }
    rep.csvs.push(csv);
    rep.csvs.push(s_csv);
    rep
}

pub fn oa_table1(models: &[ModelMeasures<'_>]) -> Report {
    let mut rep = Report::new("oa_table1_quarterly_ratios");
    let cols = [
        "Quarter", "Calls", "Calls with NOR", "NOR_F ratio", "Conversations", "With NOR", "NOR_C ratio", "Refusal", "Lack", "Legal",
        "Recall", "Irrelevant",
    ];
    let mut csv = Csv::new(
        "oa_table1_quarterly_ratios.csv",
        &[
            "model", "quarter", "n_calls", "n_calls_nor", "nor_f_ratio", "n_conversations", "n_conversations_nor", "nor_c_ratio",
            "share_refusal", "share_lack", "share_legal", "share_recall", "share_irrelevant", "share_other",
        ],
    );
    for (k, m) in models.iter().enumerate() {
        let mut rows = Vec::new();
        for q in all_quarter_ratios(m.calls) {
            let s = &q.shares;
            rows.push(vec![
                q.quarter.to_string(),
                q.n_calls.to_string(),
                q.n_calls_nor.to_string(),
                pct(q.nor_f_ratio),
                q.n_conversations.to_string(),
                q.n_conversations_nor.to_string(),
                pct(q.nor_c_ratio),
                pct(s.refusal),
                pct(s.lack),
                pct(s.legal),
                pct(s.recall),
                pct(s.irrelevant),
            ]);
            csv.rows.push(
                [m.model_id.to_string(), q.quarter.to_string(), q.n_calls.to_string(), q.n_calls_nor.to_string()]
                    .into_iter()
                    .chain([io::num(q.nor_f_ratio), q.n_conversations.to_string(), q.n_conversations_nor.to_string()])
                    .chain([q.nor_c_ratio, s.refusal, s.lack, s.legal, s.recall, s.irrelevant, s.other].map(io::num))
                    .collect(),
            );
        }
        let panel = (b'A' + k as u8) as char;
        let header: Vec<String> = cols.iter().map(|s| s.to_string()).collect();
        rep.section(&format!("Panel {panel}: {} ({})", m.model_id, m.role), &text_table(&header, &rows));
    }
    rep.csvs.push(csv);
    rep
}

pub fn figure_overlap(primary: &str, alternative: &str, o: &Overlap) -> Report {
    let mut rep = Report::new("figure_overlap");
    let rows = vec![
        vec![format!("Only {primary}"), o.only_a.to_string()],
        vec!["Both models".into(), o.common.to_string()],
        vec![format!("Only {alternative}"), o.only_b.to_string()],
        vec![format!("All {primary}"), (o.common + o.only_a).to_string()],
        vec![format!("All {alternative}"), (o.common + o.only_b).to_string()],
        vec!["Jaccard index".into(), format!("{:.4}", o.jaccard)],
    ];
    rep.section("Conversations with non-responses", &text_table(&["Set".into(), "Conversations".into()], &rows));
    let mut csv = Csv::new("figure_overlap.csv", &["model_a", "model_b", "common", "only_a", "only_b", "jaccard"]);
    csv.rows.push(vec![
        primary.into(),
        alternative.into(),
        o.common.to_string(),
        o.only_a.to_string(),
        o.only_b.to_string(),
        io::num(o.jaccard),
    ]);
    rep.csvs.push(csv);
    rep
}

/// Parallel mean bootstrap, merged in iteration order.
pub fn bootstrap_share(name: &str, units: &[f64], iterations: usize, seed: u64) -> std::result::Result<BootstrapResult, StatsError> {
    if units.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let reps: Vec<f64> = (0..iterations as u64).into_par_iter().map(|i| mean_replicate(units, seed, i)).collect();
    let estimate = units.iter().sum::<f64>() / units.len() as f64;
    Ok(BootstrapResult::from_replicates(name, estimate, seed, reps))
}

pub fn figure_bootstrap(models: &[ModelMeasures<'_>], iterations: usize, bins: usize, seeds: &Seeds) -> Report {
    let mut rep = Report::new("figure_bootstrap");
    let mut summary = Csv::new(
        "figure_bootstrap_summary.csv",
        &["model", "statistic", "quarter", "units", "estimate", "resample_mean", "resample_sd", "p2_5", "p97_5", "iterations", "seed"],
    );
    let mut hist = Csv::new("figure_bootstrap_histograms.csv", &["model", "statistic", "quarter", "bin", "lower", "count"]);
    for m in models {
        let mut quarters: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for c in m.calls {
            let e = quarters.entry(c.fiscal_quarter.to_string()).or_default();
            e.0.push(f64::from(c.nor_f));
            e.1.extend(c.conversations.iter().map(|v| f64::from(v.nor_c)));
        }
        let mut rows = Vec::new();
        for (q, (calls, convs)) in &quarters {
            for (stat, units) in [("NOR_F ratio", calls), ("NOR_C ratio", convs)] {
                let purpose = format!("bootstrap/{}/{stat}/{q}", m.role);
                let seed = seeds.derive(&purpose);
                rep.seeds.insert(purpose, seed);
                match bootstrap_share(stat, units, iterations, seed) {
                    Ok(b) => {
                        let mut sorted = b.replicates.clone();
                        sorted.sort_by(f64::total_cmp);
                        let (lo, hi) = (percentile_sorted(&sorted, 0.025), percentile_sorted(&sorted, 0.975));
                        rows.push(vec![
                            q.clone(),
                            stat.to_string(),
                            units.len().to_string(),
                            pct(b.estimate),
                            pct(b.resample_mean),
                            pct(b.resample_sd),
                            format!("[{}, {}]", pct(lo), pct(hi)),
                        ]);
                        summary.rows.push(vec![
                            m.model_id.into(),
                            stat.into(),
                            q.clone(),
                            units.len().to_string(),
                            io::num(b.estimate),
                            io::num(b.resample_mean),
                            io::num(b.resample_sd),
                            io::num(lo),
                            io::num(hi),
                            b.iterations.to_string(),
                            b.seed.to_string(),
                        ]);
                        for (i, (lower, count)) in b.histogram(bins).into_iter().enumerate() {
                            hist.rows.push(vec![m.model_id.into(), stat.into(), q.clone(), i.to_string(), io::num(lower), count.to_string()]);
                        }
                    }
                    Err(e) => rows.push(vec![q.clone(), stat.to_string(), format!("SKIPPED: {e}")]),
                }
            }
        }
        let header: Vec<String> =
            ["Quarter", "Statistic", "Units", "Estimate", "Resample mean", "Resample SD", "95% interval"].map(String::from).to_vec();
        rep.section(&format!("{} ({}), {iterations} resamples per quarter", m.model_id, m.role), &text_table(&header, &rows));
    }
    rep.csvs.push(summary);
    rep.csvs.push(hist);
    rep
}

pub fn oa_table2(models: &[(&str, &str, std::result::Result<MatchRatio, StatsError>)], runs: usize) -> Report {
    let mut rep = Report::new("oa_table2_match_ratio");
    let mut csv = Csv::new("oa_table2_match_ratio.csv", &["model", "group", "n", "mean", "sd", "min", "max"]);
    let mut units = Csv::new("oa_table2_units.csv", &["model", "conver_id", "baseline_nor", "ratio"]);
    for (k, (role, model_id, result)) in models.iter().enumerate() {
        let panel = (b'A' + k as u8) as char;
        let heading = format!("Panel {panel}: {model_id} ({role}), {runs} repetitions");
        match result {
            Ok(m) => {
                let rows: Vec<Vec<String>> = m
                    .groups
                    .iter()
                    .map(|g| {
                        let label = if g.group == "Total" { "Total".to_string() } else { format!("NOR_C = {}", g.group) };
                        vec![label, g.n.to_string(), format!("{:.2}", g.mean), format!("{:.2}", g.sd), format!("{:.2}", g.min), format!("{:.2}", g.max)]
                    })
                    .collect();
                for g in &m.groups {
                    csv.rows.push(vec![
                        model_id.to_string(),
                        g.group.clone(),
                        g.n.to_string(),
                        io::num(g.mean),
                        io::num(g.sd),
                        io::num(g.min),
                        io::num(g.max),
                    ]);
                }
                for u in &m.units {
                    units.rows.push(vec![model_id.to_string(), u.conver_id.clone(), u.baseline_nor.to_string(), io::num(u.ratio)]);
                }
                let header: Vec<String> = ["Baseline", "N", "Mean %", "SD", "Min", "Max"].map(String::from).to_vec();
                rep.section(&heading, &text_table(&header, &rows));
            }
            Err(e) => rep.section(&heading, &format!("SKIPPED: {e}\n")),
        }
    }
    rep.csvs.push(csv);
    rep.csvs.push(units);
    rep
}

/// Parses `COL OP VALUE`, e.g. `COVID == 1`.
pub fn parse_filter(text: &str) -> std::result::Result<(String, Cmp, f64), String> {
    for op in ["==", "!=", ">=", "<=", ">", "<", "="] {
        if let Some((col, value)) = text.split_once(op) {
            let cmp = Cmp::parse(op).expect("known operator");
            let value: f64 = value.trim().parse().map_err(|_| format!("filter `{text}`: value is not a number"))?;
            let col = col.trim();
            if col.is_empty() {
                return Err(format!("filter `{text}` names no column"));
            }
            return Ok((col.to_string(), cmp, value));
        }
    }
    Err(format!("filter `{text}` has no comparison operator"))
}

pub fn user_spec(e: &SpecEntry, est: &Estimation) -> std::result::Result<RegressionSpec, String> {
    let regs: Vec<&str> = e.regressors.iter().map(String::as_str).collect();
    let mut s = est.spec(&e.name, &e.dependent, &regs);
    for [a, b] in &e.interactions {
        s = s.with_interaction(a, b);
    }
    s = s.with_fixed_effects(match e.fixed_effects {
        FeChoice::Both => FixedEffects::BOTH,
        FeChoice::Firm => FixedEffects { firm: true, quarter: false },
        FeChoice::Quarter => FixedEffects { firm: false, quarter: true },
        FeChoice::None => FixedEffects::NONE,
    });
    if let Some(c) = &e.cluster {
        s = s.with_cluster((!c.is_empty()).then_some(c.as_str()));
    }
    for f in &e.filter {
        let (col, cmp, v) = parse_filter(f)?;
        s = s.with_filter(&col, cmp, v);
    }
    s.validate().map_err(|err| err.to_string())?;
    Ok(s)
}

pub fn user_specs(entries: &[SpecEntry], frames: &Frames, est: &Estimation) -> Report {
    let mut rep = Report::new(USER_SPECS);
    for e in entries {
        let frame = match e.level {
            SpecLevel::Firm => Some(&frames.panel),
            SpecLevel::Individual => frames.individual.as_ref(),
            SpecLevel::Conversation => frames.conversation.as_ref(),
        };
        let heading = format!("{} ({:?} level, {:?})", e.name, e.level, e.estimator).to_lowercase();
        let Some(frame) = frame else {
            rep.section(&heading, "SKIPPED: this level is not available\n");
            continue;
        };
        match user_spec(e, est) {
            Ok(s) => {
                let fit = match e.estimator {
                    Estimator::Ols => fe_ols(&s, frame),
                    Estimator::Logit => logit(&s, frame),
                };
                rep.regressions(&heading, vec![Column::new(&e.dependent, fit)], None, &[]);
            }
            Err(msg) => rep.section(&heading, &format!("SKIPPED: {msg}\n")),
        }
    }
    rep
}

/// Every regression family, in report order.
pub fn regression_reports(frames: &Frames, cfg: &RunConfig) -> Vec<Report> {
    let est = Estimation::from_config(cfg);
    let mut out = vec![
        table2(frames, &est),
        table3(frames, &est),
        table4(frames, &est),
        table5(frames, &est),
        table6(frames, &est),
        table7(frames, &est),
        table8(frames, &est),
        oa_table3(frames, &est),
    ];
    if !cfg.spec.is_empty() {
        out.push(user_specs(&cfg.spec, frames, &est));
    }
    out
}
