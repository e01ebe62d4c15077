//! Append-only annotation cache, one JSON object per line, one file per
//! model. Entries are keyed by prompt hash (and repetition).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;
use nonanswer_core::elicitor::NorAnnotation;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<u32>,
    /// Transient failures before the reply arrived.
    #[serde(default)]
    pub retries: u32,
    #[serde(flatten)]
    pub annotation: NorAnnotation,
}

type Key = (String, Option<u32>);

#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    entries: HashMap<Key, CacheEntry>,
    file: Option<File>,
    /// The file ends in a torn line; the next append starts a fresh one.
    needs_newline: bool,
}

/// File-system-safe form of a model id.
pub fn file_stem(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

impl Cache {
    /// Opens (or starts) `dir/<model>.jsonl`. A malformed line, such as a
    /// half-written last line after an interruption, is skipped.
    pub fn open(dir: &Path, model_id: &str) -> Result<Cache> {
        let path = dir.join(format!("{}.jsonl", file_stem(model_id)));
        let mut entries = HashMap::new();
        let mut needs_newline = false;
        if path.is_file() {
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            needs_newline = bytes.last().is_some_and(|b| *b != b'\n');
            let f = File::open(&path).map_err(|e| CliError::io(&path, e))?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| CliError::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(e) if e.annotation.model_id == model_id => {
                        entries.insert((e.prompt_hash.clone(), e.rep), e);
                    }
                    Ok(_) => warn!("{}:{}: entry for another model skipped", path.display(), n + 1),
                    Err(err) => warn!("{}:{}: unreadable cache line skipped: {err}", path.display(), n + 1),
                }
            }
        }
        Ok(Cache {
            path,
            entries,
            file: None,
            needs_newline,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, prompt_hash: &str, rep: Option<u32>) -> Option<&CacheEntry> {
        self.entries.get(&(prompt_hash.to_string(), rep))
    }

    /// Appends and flushes one entry.
    pub fn append(&mut self, entry: CacheEntry) -> Result<()> {
        if self.file.is_none() {
            if let Some(dir) = self.path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| CliError::io(&self.path, e))?;
            self.file = Some(f);
        }
        let mut line = if std::mem::take(&mut self.needs_newline) { String::from("\n") } else { String::new() };
        line.push_str(&serde_json::to_string(&entry).map_err(|e| CliError::data(e.to_string()))?);
        line.push('\n');
        let f = self.file.as_mut().expect("opened above");
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| CliError::io(&self.path, e))?;
        self.entries.insert((entry.prompt_hash.clone(), entry.rep), entry);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonanswer_core::elicitor::validate_reply;

    #[test]
    fn persists_and_skips_torn_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Cache::open(dir.path(), "gpt/4").unwrap();
        let a = validate_reply(r#"{"NOR": 0, "Pair": null, "Category": null, "Quantity": 8, "Relevance": 9, "Clarity": 9}"#)
            .with_ids("T-1", "gpt/4");
        c.append(CacheEntry { prompt_hash: "h".into(), rep: None, retries: 2, annotation: a.clone() }).unwrap();
        assert!(c.path().ends_with("gpt_4.jsonl"));
        let mut raw = std::fs::read_to_string(c.path()).unwrap();
        raw.push_str("{\"prompt_hash\": \"x\", \"con");
        std::fs::write(c.path(), raw).unwrap();
        let mut c = Cache::open(dir.path(), "gpt/4").unwrap();
        assert_eq!(c.len(), 1);
        let b = a.clone().with_ids("T-2", "gpt/4");
        c.append(CacheEntry { prompt_hash: "h2".into(), rep: None, retries: 0, annotation: b }).unwrap();
        let c = Cache::open(dir.path(), "gpt/4").unwrap();
        assert_eq!(c.len(), 2);
        let e = c.get("h", None).unwrap();
        assert_eq!(e.annotation, a);
        assert_eq!(e.retries, 2);
        assert!(c.get("h", Some(0)).is_none());
    }
}
