//! Pipeline commands. Each one reads upstream artifacts from the output
//! directory, writes its own, records a manifest and refreshes the report
//! index.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::info;
use nonanswer_core::corpus::{exchange_word_count, QaExchange, Transcript};
use nonanswer_core::elicitor::NorAnnotation;
use nonanswer_core::lexicon::{exchange_metrics, text_metrics, TextMetrics, WordLists};
use nonanswer_core::measures::{
    all_quarter_ratios, group_by_transcript, model_overlap, summarize_call, CallKey, CallMeasures, ConversationMeasure,
};
use nonanswer_core::panel::assemble::{conversation_frame, conversation_panel, individual_frame, panel_frame, ExchangeInfo};
use nonanswer_core::panel::{assemble_panel, PanelOptions, PanelSources, SelectionLedger};
use nonanswer_core::stats::match_ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annotate::{annotate_corpus, AnnotateOptions, AnnotateStats};
use crate::backends;
use crate::cache::Cache;
use crate::config::{ModelConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest;
use crate::io;
use crate::manifest::{write_manifest, StageRecord};
use crate::synth::{generate, SynthOptions};
use crate::tables::{self, Frames, ModelMeasures, Report};

pub const ANNOTATIONS_DIR: &str = "annotations";
pub const MEASURES_DIR: &str = "measures";
pub const PANEL_DIR: &str = "panel";
pub const PANEL_FILE: &str = "panel/panel.csv";
pub const INDIVIDUAL_FILE: &str = "panel/individual_panel.csv";
pub const CONVERSATION_FILE: &str = "panel/conversation_panel.csv";
pub const PANEL_LEDGER: &str = "panel/selection_ledger.txt";

/// The two configured models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Primary,
    Alternative,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Primary => "primary",
            Role::Alternative => "alternative",
        }
    }

    pub fn model(self, cfg: &RunConfig) -> &ModelConfig {
        match self {
            Role::Primary => &cfg.backend.primary,
            Role::Alternative => &cfg.backend.alternative,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Role::Primary => "",
            Role::Alternative => "_alt",
        }
    }
}

/// `--model` choice of the annotate command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Models {
    Primary,
    Alternative,
    Both,
}

impl Models {
    pub fn roles(self) -> &'static [Role] {
        match self {
            Models::Primary => &[Role::Primary],
            Models::Alternative => &[Role::Alternative],
            Models::Both => &[Role::Primary, Role::Alternative],
        }
    }
}

pub fn annotations_path(cfg: &RunConfig, role: Role) -> PathBuf {
    cfg.paths.output.join(ANNOTATIONS_DIR).join(format!("{}.jsonl", role.name()))
}

fn out(cfg: &RunConfig, rel: &str) -> PathBuf {
    cfg.paths.output.join(rel)
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::data(format!("{what} directory {} does not exist", path.display())))
    }
}

fn require_file(path: &Path, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::data(format!("{} not found; run `{hint}` first", path.display())))
    }
}

fn finish(cfg: &RunConfig, command: &str, mut record: StageRecord) -> Result<StageRecord> {
    record.output(write_manifest(cfg, command, &record)?);
    tables::write_index(&cfg.paths.output, !cfg.spec.is_empty())?;
    Ok(record)
}

fn write_report(rep: &Report, cfg: &RunConfig, record: &mut StageRecord) -> Result<()> {
    for p in rep.write(&cfg.paths.output)? {
        record.output(p);
    }
    for (purpose, seed) in &rep.seeds {
        record.seed(purpose, *seed);
    }
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<StageRecord> {
    require_dir(&cfg.paths.corpus, "corpus")?;
    let ing = ingest::ingest_dir(&cfg.paths.corpus)?;
    let mut record = StageRecord::default();
    record.input(&cfg.paths.corpus);
    for p in ingest::write_corpus(&cfg.paths.output, &ing)? {
        record.output(p);
    }
    println!(
        "ingest: {} transcripts kept, {} dropped, {} unparseable",
        ing.transcripts.len(),
        ing.ledger.total_dropped(),
        ing.failed.len()
    );
    finish(cfg, "ingest", record)
}

fn exchanges(corpus: &[Transcript]) -> Vec<QaExchange> {
    corpus.iter().flat_map(|t| t.exchanges.iter().cloned()).collect()
}

fn annotate_options(cfg: &RunConfig) -> AnnotateOptions {
    AnnotateOptions {
        jobs: cfg.backend.jobs,
        max_retries: cfg.backend.max_retries,
        backoff: Duration::from_millis(cfg.backend.backoff_ms),
        params: cfg.backend.params(),
    }
}

pub fn annotate(cfg: &RunConfig, models: Models) -> Result<StageRecord> {
    let corpus_path = out(cfg, ingest::TRANSCRIPTS_FILE);
    let corpus = ingest::read_corpus(&cfg.paths.output)?;
    let xs = exchanges(&corpus);
    let mut record = StageRecord::default();
    record.input(&corpus_path);
    let opts = annotate_options(cfg);
    for &role in models.roles() {
        let model = role.model(cfg);
        let backend = backends::build(model, &cfg.backend)?;
        let mut cache = Cache::open(&cfg.paths.cache, &model.model_id)?;
        let (anns, stats) = annotate_corpus(&xs, backend.as_ref(), &mut cache, None, &opts)?;
        let path = annotations_path(cfg, role);
        io::write_jsonl(&path, &anns)?;
        record.output(path);
        print_stats(role, &model.model_id, &stats);
    }
    finish(cfg, "annotate", record)
}

fn print_stats(role: Role, model_id: &str, s: &AnnotateStats) {
    println!(
        "annotate {} ({model_id}): {} exchanges, {} from cache, {} sent, {} retries, {} ERROR",
        role.name(),
        s.exchanges,
        s.cached,
        s.sent,
        s.retries,
        s.errors
    );
}

fn read_annotations(cfg: &RunConfig, role: Role) -> Result<Option<Vec<NorAnnotation>>> {
    let p = annotations_path(cfg, role);
    if p.is_file() {
        io::read_jsonl(&p).map(Some)
    } else {
        Ok(None)
    }
}

fn primary_annotations(cfg: &RunConfig) -> Result<Vec<NorAnnotation>> {
    read_annotations(cfg, Role::Primary)?
        .ok_or_else(|| CliError::data(format!("{} not found; run `annotate` first", annotations_path(cfg, Role::Primary).display())))
}

/// Call measures of every transcript with at least one valid annotation,
/// plus the ids of calls where every annotation is an ERROR.
pub fn call_measures(corpus: &[Transcript], annotations: &[NorAnnotation]) -> (Vec<CallMeasures>, Vec<String>) {
    let grouped = group_by_transcript(annotations);
    let mut calls = Vec::new();
    let mut errored = Vec::new();
    for t in corpus {
        let key = CallKey {
            transcript_id: t.transcript_id.clone(),
            firm_id: t.firm_id.clone(),
            fiscal_quarter: t.fiscal_quarter,
        };
        let anns = grouped.get(t.transcript_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        match summarize_call(&key, anns) {
            Ok(c) => calls.push(c),
            Err(_) => errored.push(t.transcript_id.clone()),
        }
    }
    (calls, errored)
}

/// Measures of one model, recomputed from its annotation file.
pub struct Measured {
    pub role: Role,
    pub model_id: String,
    pub annotations: Vec<NorAnnotation>,
    pub calls: Vec<CallMeasures>,
    pub errored: Vec<String>,
}

impl Measured {
    fn view(&self) -> ModelMeasures<'_> {
        ModelMeasures {
            role: self.role.name(),
            model_id: &self.model_id,
            annotations: &self.annotations,
            calls: &self.calls,
        }
    }
}

fn measured(cfg: &RunConfig, corpus: &[Transcript], record: &mut StageRecord) -> Result<Vec<Measured>> {
    let mut out = Vec::new();
    for role in [Role::Primary, Role::Alternative] {
        let anns = match role {
            Role::Primary => Some(primary_annotations(cfg)?),
            Role::Alternative => read_annotations(cfg, role)?,
        };
        let Some(annotations) = anns else { continue };
        record.input(annotations_path(cfg, role));
        let (calls, errored) = call_measures(corpus, &annotations);
        out.push(Measured {
            role,
            model_id: role.model(cfg).model_id.clone(),
            annotations,
            calls,
            errored,
        });
    }
    Ok(out)
}

fn load_corpus(cfg: &RunConfig, record: &mut StageRecord) -> Result<Vec<Transcript>> {
    let corpus = ingest::read_corpus(&cfg.paths.output)?;
    record.input(out(cfg, ingest::TRANSCRIPTS_FILE));
    Ok(corpus)
}

fn load_lexicon(cfg: &RunConfig, record: &mut StageRecord) -> Result<WordLists> {
    require_dir(&cfg.paths.lexicon, "lexicon")?;
    let lists = ingest::load_word_lists(&cfg.paths.lexicon)?;
    for f in ingest::LEXICON_FILES {
        record.input(cfg.paths.lexicon.join(f));
    }
    Ok(lists)
}

fn presentation_metrics(cfg: &RunConfig, corpus: &[Transcript], lists: &WordLists) -> BTreeMap<String, TextMetrics> {
    corpus
        .iter()
        .map(|t| (t.transcript_id.clone(), text_metrics(&t.presentation, lists, cfg.text.fog())))
        .collect()
}

fn exchange_infos(cfg: &RunConfig, corpus: &[Transcript], lists: &WordLists) -> BTreeMap<String, ExchangeInfo> {
    corpus
        .iter()
        .flat_map(|t| &t.exchanges)
        .map(|x| {
            let info = ExchangeInfo {
                conver_id: x.conver_id.clone(),
                order: x.order,
                word: exchange_word_count(x),
                metrics: exchange_metrics(x, lists, cfg.text.scope(), cfg.text.fog()),
            };
            (x.conver_id.clone(), info)
        })
        .collect()
}

const METRIC_HEADER: [&str; 5] = ["tone", "uncert", "forward", "fog", "word_count"];

fn metric_cells(m: &TextMetrics) -> [String; 5] {
    [io::num(m.tone), io::num(m.uncert), io::num(m.forward), io::num(m.fog), m.word_count.to_string()]
}

fn write_measures(dir: &Path, m: &Measured) -> Result<Vec<PathBuf>> {
    let sfx = m.role.suffix();
    let calls = dir.join(format!("call_measures{sfx}.csv"));
    io::write_csv(
        &calls,
        &[
            "transcript_id", "firm_id", "fiscal_quarter", "NOR_F", "NOR_Firm", "Refusal", "Lack", "Legal", "Recall", "Irrelevant",
            "Other", "Unlabeled", "Quantity", "Relevance", "Clarity", "Mscore", "n_exchanges", "n_errors",
        ],
        m.calls.iter().map(|c| {
            let k = &c.categories;
            vec![
                c.transcript_id.clone(),
                c.firm_id.clone(),
                c.fiscal_quarter.to_string(),
                c.nor_f.to_string(),
                c.nor_firm.to_string(),
                k.refusal.to_string(),
                k.lack.to_string(),
                k.legal.to_string(),
                k.recall.to_string(),
                k.irrelevant.to_string(),
                k.other.to_string(),
                c.unlabeled.to_string(),
                io::opt(c.quantity),
                io::opt(c.relevance),
                io::opt(c.clarity),
                io::opt(c.mscore),
                c.n_exchanges.to_string(),
                c.n_errors.to_string(),
            ]
        }),
    )?;
    let convs = dir.join(format!("conversation_measures{sfx}.csv"));
    let score = |v: Option<u8>| v.map(|s| s.to_string()).unwrap_or_default();
    io::write_csv(
        &convs,
        &["conver_id", "NOR_C", "NOR_Con", "Category", "Quantity", "Relevance", "Clarity"],
        m.annotations.iter().filter_map(ConversationMeasure::from_annotation).map(|c| {
            vec![
                c.conver_id.clone(),
                c.nor_c.to_string(),
                c.nor_con.to_string(),
                c.category.iter().map(|k| k.label()).collect::<Vec<_>>().join("; "),
                score(c.quantity),
                score(c.relevance),
                score(c.clarity),
            ]
        }),
    )?;
    let ratios = dir.join(format!("quarter_ratios{sfx}.csv"));
    io::write_csv(
        &ratios,
        &["fiscal_quarter", "n_calls", "n_calls_nor", "NOR_F_ratio", "n_conversations", "n_conversations_nor", "NOR_C_ratio"],
        all_quarter_ratios(&m.calls).into_iter().map(|q| {
            vec![
                q.quarter.to_string(),
                q.n_calls.to_string(),
                q.n_calls_nor.to_string(),
                io::num(q.nor_f_ratio),
                q.n_conversations.to_string(),
                q.n_conversations_nor.to_string(),
                io::num(q.nor_c_ratio),
            ]
        }),
    )?;
    Ok(vec![calls, convs, ratios])
}

pub fn measure(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let corpus = load_corpus(cfg, &mut record)?;
    let lists = load_lexicon(cfg, &mut record)?;
    let models = measured(cfg, &corpus, &mut record)?;
    let dir = out(cfg, MEASURES_DIR);
    for m in &models {
        for p in write_measures(&dir, m)? {
            record.output(p);
        }
    }
    let xpath = dir.join("exchange_metrics.csv");
    let header: Vec<&str> = ["conver_id", "order", "word"].into_iter().chain(METRIC_HEADER).collect();
    io::write_csv(
        &xpath,
        &header,
        exchange_infos(cfg, &corpus, &lists)
            .into_values()
            .map(|x| [x.conver_id, x.order.to_string(), x.word.to_string()].into_iter().chain(metric_cells(&x.metrics)).collect::<Vec<_>>()),
    )?;
    record.output(xpath);
    let ppath = dir.join("presentation_metrics.csv");
    let header: Vec<&str> = ["transcript_id"].into_iter().chain(METRIC_HEADER).collect();
    io::write_csv(
        &ppath,
        &header,
        presentation_metrics(cfg, &corpus, &lists)
            .into_iter()
            .map(|(id, m)| std::iter::once(id).chain(metric_cells(&m)).collect::<Vec<_>>()),
    )?;
    record.output(ppath);
    let views: Vec<ModelMeasures<'_>> = models.iter().map(Measured::view).collect();
    write_report(&tables::table1(&views), cfg, &mut record)?;
    write_report(&tables::oa_table1(&views), cfg, &mut record)?;
    finish(cfg, "measure", record)
}

pub fn panel(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let corpus = load_corpus(cfg, &mut record)?;
    let lists = load_lexicon(cfg, &mut record)?;
    let models = measured(cfg, &corpus, &mut record)?;
    let primary = &models[0];
    let alt = models.iter().find(|m| m.role == Role::Alternative);

    require_dir(&cfg.paths.data, "data")?;
    let data = &cfg.paths.data;
    let (forecasts, detail) = io::load_forecasts(data)?;
    let fundamentals = io::load_fundamentals(data)?;
    let market = io::load_market(data)?.unwrap_or_default();
    let incentives = io::load_incentives(data)?.unwrap_or_default();
    for f in [io::FORECASTS_SUMMARY, io::FORECASTS_DETAIL, io::FUNDAMENTALS, io::DAILY_MARKET, io::INCENTIVES] {
        record.input(data.join(f));
    }
    let presentation = presentation_metrics(cfg, &corpus, &lists);
    let assembled = assemble_panel(
        &PanelSources {
            calls: &primary.calls,
            alt_calls: alt.map(|m| m.calls.as_slice()),
            forecasts: &forecasts,
            detail: &detail,
            fundamentals: &fundamentals,
            market: &market,
            incentives: &incentives,
            presentation: &presentation,
        },
        PanelOptions { hrd_basis: cfg.stats.hrd() },
    );

    let mut ledger: SelectionLedger = ingest::read_ingest_ledger(&cfg.paths.output)?;
    record.input(out(cfg, ingest::INGEST_LEDGER_JSON));
    let conversations: usize = primary.calls.iter().map(|c| c.n_exchanges as usize).sum();
    ledger.record("calls where every annotation is an ERROR", primary.calls.len(), conversations);
    ledger.extend(&assembled.ledger);

    let alt_convs: Vec<ConversationMeasure> = alt
        .map(|m| m.annotations.iter().filter_map(ConversationMeasure::from_annotation).collect())
        .unwrap_or_default();
    let conv_rows = conversation_panel(&assembled.rows, &primary.calls, &alt_convs, &exchange_infos(cfg, &corpus, &lists));

    let files = [
        (PANEL_FILE, panel_frame(&assembled.rows)),
        (INDIVIDUAL_FILE, individual_frame(&assembled.individual)),
        (CONVERSATION_FILE, conversation_frame(&conv_rows)),
    ];
    for (rel, frame) in &files {
        let p = out(cfg, rel);
        io::write_frame(&p, frame)?;
        record.output(p);
    }
    let lp = out(cfg, PANEL_LEDGER);
    io::write_text(&lp, &ledger.render("Sample selection"))?;
    record.output(lp);
    println!(
        "panel: {} firm-quarters, {} analyst rows, {} conversations",
        assembled.rows.len(),
        assembled.individual.len(),
        conv_rows.len()
    );
    finish(cfg, "panel", record)
}

/// Reads the panel files written by `panel`.
pub fn read_frames(cfg: &RunConfig, record: &mut StageRecord) -> Result<Frames> {
    let p = out(cfg, PANEL_FILE);
    require_file(&p, "panel")?;
    let panel = io::read_frame(&p)?;
    record.input(&p);
    let optional = |rel: &str, record: &mut StageRecord| -> Result<Option<nonanswer_core::stats::Frame>> {
        let p = out(cfg, rel);
        if !p.is_file() {
            return Ok(None);
        }
        record.input(&p);
        let f = io::read_frame(&p)?;
        Ok((!f.is_empty()).then_some(f))
    };
    let individual = optional(INDIVIDUAL_FILE, record)?.map(|f| tables::join_panel(&f, &panel));
    let conversation = optional(CONVERSATION_FILE, record)?;
    Ok(Frames { panel, individual, conversation })
}

pub fn regress(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let frames = read_frames(cfg, &mut record)?;
    for rep in tables::regression_reports(&frames, cfg) {
        info!("{}: written", rep.name);
        write_report(&rep, cfg, &mut record)?;
    }
    finish(cfg, "regress", record)
}

pub fn bootstrap(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let corpus = load_corpus(cfg, &mut record)?;
    let models = measured(cfg, &corpus, &mut record)?;
    let views: Vec<ModelMeasures<'_>> = models.iter().map(Measured::view).collect();
    let rep = tables::figure_bootstrap(&views, cfg.stats.bootstrap_iterations, cfg.stats.histogram_bins, &cfg.seeds);
    write_report(&rep, cfg, &mut record)?;
    finish(cfg, "bootstrap", record)
}

/// Repeats the identification of a seeded sample of conversations and
/// compares every repetition with the baseline annotations.
pub fn stability(cfg: &RunConfig, models: Models) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let corpus = load_corpus(cfg, &mut record)?;
    let xs = exchanges(&corpus);
    let opts = annotate_options(cfg);
    let runs = cfg.stats.stability_runs;
    let mut results = Vec::new();
    for &role in models.roles() {
        let model = role.model(cfg);
        let Some(baseline) = read_annotations(cfg, role)? else {
            if role == Role::Primary {
                primary_annotations(cfg)?;
            }
            continue;
        };
        record.input(annotations_path(cfg, role));
        let purpose = format!("stability/sample/{}", role.name());
        let seed = cfg.seeds.derive(&purpose);
        record.seed(&purpose, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = cfg.stats.stability_sample.min(xs.len());
        let mut picked = sample(&mut rng, xs.len(), n).into_vec();
        picked.sort_unstable();
        let sample_x: Vec<QaExchange> = picked.iter().map(|&i| xs[i].clone()).collect();
        let ids: std::collections::BTreeSet<&str> = sample_x.iter().map(|x| x.conver_id.as_str()).collect();
        let base: Vec<NorAnnotation> = baseline.iter().filter(|a| ids.contains(a.conver_id.as_str())).cloned().collect();

        let backend = backends::build(model, &cfg.backend)?;
        let mut cache = Cache::open(&cfg.paths.cache, &model.model_id)?;
        let mut reps = Vec::with_capacity(runs);
        for r in 0..runs {
            let (anns, _) = annotate_corpus(&sample_x, backend.as_ref(), &mut cache, Some(r as u32), &opts)?;
            reps.push(anns);
        }
        results.push((role.name(), model.model_id.as_str(), match_ratio(&base, &reps)));
    }
    write_report(&tables::oa_table2(&results, runs), cfg, &mut record)?;
    finish(cfg, "stability", record)
}

pub fn overlap(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    let a = primary_annotations(cfg)?;
    record.input(annotations_path(cfg, Role::Primary));
    let rep = match read_annotations(cfg, Role::Alternative)? {
        Some(b) => {
            record.input(annotations_path(cfg, Role::Alternative));
            let o = model_overlap(&a, &b);
            tables::figure_overlap(&cfg.backend.primary.model_id, &cfg.backend.alternative.model_id, &o)
        }
        None => Report::skipped("figure_overlap", "no alternative-model annotations; run `annotate --model both`"),
    };
    write_report(&rep, cfg, &mut record)?;
    finish(cfg, "overlap", record)
}

/// Every stage in order, both models.
pub fn run_all(cfg: &RunConfig) -> Result<StageRecord> {
    let mut record = StageRecord::default();
    record.merge(ingest(cfg)?);
    record.merge(annotate(cfg, Models::Both)?);
    record.merge(measure(cfg)?);
    record.merge(panel(cfg)?);
    record.merge(regress(cfg)?);
    record.merge(bootstrap(cfg)?);
    record.merge(stability(cfg, Models::Both)?);
    record.merge(overlap(cfg)?);
    // Only files from the configured input directories count as inputs.
    let outputs = cfg.paths.output.clone();
    record.inputs.retain(|p| !p.starts_with(&outputs));
    record.outputs.retain(|p| !p.starts_with(outputs.join("manifests")));
    record.inputs.sort();
    record.inputs.dedup();
    finish(cfg, "run-all", record)
}

/// Writes the synthetic corpus, market data and word lists into the
/// configured data and lexicon directories.
pub fn synth(cfg: &RunConfig, opts: &SynthOptions) -> Result<Vec<PathBuf>> {
    let data = generate(opts);
    let written = data.write(&cfg.paths.data, &cfg.paths.lexicon)?;
    println!("synth: {} files", written.len());
    Ok(written)
}
