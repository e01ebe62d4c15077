//! Corpus ingestion: parse every transcript file, drop duplicates and
//! persist the canonical corpus. Also loads the word lists.

use std::path::{Path, PathBuf};

use log::warn;
use nonanswer_core::corpus::{dedupe_corpus, parse_transcript, DropReason, Transcript};
use nonanswer_core::lexicon::WordLists;
use nonanswer_core::panel::SelectionLedger;

use crate::error::{CliError, Result};
use crate::io;

pub const TRANSCRIPTS_FILE: &str = "corpus/transcripts.jsonl";
pub const EXCHANGES_FILE: &str = "corpus/exchanges.jsonl";
pub const INGEST_LEDGER: &str = "ingest_ledger.txt";
pub const INGEST_LEDGER_JSON: &str = "corpus/ingest_ledger.json";

#[derive(Debug)]
pub struct Ingested {
    pub transcripts: Vec<Transcript>,
    pub ledger: SelectionLedger,
    pub failed: Vec<(PathBuf, String)>,
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for e in entries {
        let path = e.map_err(|e| CliError::io(dir, e))?.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Parses and dedupes a corpus directory. Unparseable files are skipped
/// and reported; an empty result is a data error.
pub fn ingest_dir(dir: &Path) -> Result<Ingested> {
    let mut parsed = Vec::new();
    let mut failed = Vec::new();
    for path in corpus_files(dir)? {
        let raw = match std::fs::read_to_string(&path) {
            Ok(r) => r,
            Err(e) => {
                warn!("{}: {e}", path.display());
                failed.push((path, e.to_string()));
                continue;
            }
        };
        match parse_transcript(&raw) {
            Ok(t) => parsed.push(t),
            Err(e) => {
                warn!("{}: line {}: {}", path.display(), e.line, e.reason);
                failed.push((path, format!("line {}: {}", e.line, e.reason)));
            }
        }
    }
    if parsed.is_empty() {
        return Err(CliError::data(format!("no parseable transcripts in {}", dir.display())));
    }
    let conversations = |ts: &[Transcript]| ts.iter().map(|t| t.exchanges.len()).sum::<usize>();
    let mut ledger = SelectionLedger::start(parsed.len(), conversations(&parsed));
    let outcome = dedupe_corpus(parsed);
    let (mut n, mut c) = (ledger.output(), ledger.output_conversations());
    for (label, multi) in [("superseded transcript versions", false), ("transcripts attached to more than one firm", true)] {
        for d in outcome
            .dropped
            .iter()
            .filter(|d| matches!(d.reason, DropReason::MultipleFirms) == multi)
        {
            n -= 1;
            c -= d.conversations;
        }
        ledger.record(label, n, c);
    }
    Ok(Ingested {
        transcripts: outcome.kept,
        ledger,
        failed,
    })
}

/// Writes the canonical corpus and the ingest ledger under `out`.
pub fn write_corpus(out: &Path, ing: &Ingested) -> Result<Vec<PathBuf>> {
    let transcripts = out.join(TRANSCRIPTS_FILE);
    let exchanges = out.join(EXCHANGES_FILE);
    let ledger = out.join(INGEST_LEDGER);
    let ledger_json = out.join(INGEST_LEDGER_JSON);
    io::write_jsonl(&transcripts, &ing.transcripts)?;
    io::write_jsonl(&exchanges, ing.transcripts.iter().flat_map(|t| &t.exchanges))?;
    let mut text = ing.ledger.render("Transcript selection");
    if !ing.failed.is_empty() {
        text.push_str(&format!("\nUnparseable files ({}):\n", ing.failed.len()));
        for (p, why) in &ing.failed {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            text.push_str(&format!("  {name}: {why}\n"));
        }
    }
    io::write_text(&ledger, &text)?;
    let json = serde_json::to_string_pretty(&ing.ledger).map_err(|e| CliError::data(e.to_string()))?;
    io::write_text(&ledger_json, &(json + "\n"))?;
    Ok(vec![transcripts, exchanges, ledger, ledger_json])
}

pub fn read_corpus(out: &Path) -> Result<Vec<Transcript>> {
    let path = out.join(TRANSCRIPTS_FILE);
    if !path.is_file() {
        return Err(CliError::data(format!("{} not found; run `ingest` first", path.display())));
    }
    io::read_jsonl(&path)
}

pub fn read_ingest_ledger(out: &Path) -> Result<SelectionLedger> {
    let path = out.join(INGEST_LEDGER_JSON);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub const LEXICON_FILES: [&str; 4] = ["positive.txt", "negative.txt", "uncertainty.txt", "forward.txt"];

pub fn load_word_lists(dir: &Path) -> Result<WordLists> {
    let mut texts = Vec::with_capacity(4);
    for name in LEXICON_FILES {
        let p = dir.join(name);
        texts.push(std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?);
    }
    WordLists::parse(&texts[0], &texts[1], &texts[2], &texts[3])
        .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, firm: &str, version: u32) -> String {
        format!(
            "#id: {id}\n#firm: {firm}\n#quarter: 2020Q1\n#version: {version}\n[PRESENTATION]\nWelcome to the call.\n[QA]\n\
             [Analyst][Ann]: How are margins?\n[Manager][Bob]: Margins are fine.\n[Analyst][Cy]: And costs?\n[Manager][Bob]: Lower.\n"
        )
    }

    #[test]
    fn versions_and_multi_firm_drops() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a1.txt"), doc("T1", "F1", 1)).unwrap();
        std::fs::write(dir.path().join("a2.txt"), doc("T1", "F1", 2)).unwrap();
        std::fs::write(dir.path().join("b.txt"), doc("T2", "F2", 1)).unwrap();
        std::fs::write(dir.path().join("c1.txt"), doc("T3", "F3", 1)).unwrap();
        std::fs::write(dir.path().join("c2.txt"), doc("T3", "F4", 1)).unwrap();
        std::fs::write(dir.path().join("bad.txt"), "#id: X\n").unwrap();
        let ing = ingest_dir(dir.path()).unwrap();
        assert_eq!(ing.transcripts.len(), 2);
        assert_eq!(ing.transcripts[0].version, 2);
        assert_eq!(ing.failed.len(), 1);
        assert_eq!(ing.ledger.input, 5);
        assert_eq!(ing.ledger.stages[0].dropped, 1);
        assert_eq!(ing.ledger.stages[1].dropped, 2);
        assert_eq!(ing.ledger.output_conversations(), 4);
    }

    #[test]
    fn empty_corpus_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.txt"), "nothing here").unwrap();
        assert_eq!(ingest_dir(dir.path()).unwrap_err().exit_code(), 2);
    }
}
