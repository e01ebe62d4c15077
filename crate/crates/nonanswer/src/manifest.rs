//! Per-command manifests: config hash, input and output hashes, seeds and
//! versions. Two runs with equal manifests produced equal outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nonanswer_core::elicitor::TEMPLATE_VERSION;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io;

pub const MANIFEST_DIR: &str = "manifests";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub core_version: String,
    pub prompt_template: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// What one command read, wrote and which seeds it drew from.
#[derive(Debug, Clone, Default)]
pub struct StageRecord {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
}

impl StageRecord {
    pub fn input(&mut self, p: impl Into<PathBuf>) {
        self.inputs.push(p.into());
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    pub fn seed(&mut self, purpose: &str, seed: u64) {
        self.seeds.insert(purpose.to_string(), seed);
    }

    pub fn merge(&mut self, other: StageRecord) {
        self.inputs.extend(other.inputs);
        self.outputs.extend(other.outputs);
        self.seeds.extend(other.seeds);
    }
}

/// Paths under `root` are recorded relative to it.
fn key(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

fn hashes(paths: &[PathBuf], root: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file())
                .collect();
            files.sort();
            for f in files {
                out.insert(key(&f, root), file_sha256(&f)?);
            }
        } else if p.is_file() {
            out.insert(key(p, root), file_sha256(p)?);
        }
    }
    Ok(out)
}

/// Builds the manifest of `command` and writes it to
/// `<output>/manifests/<command>.json`.
pub fn write_manifest(cfg: &RunConfig, command: &str, record: &StageRecord) -> Result<PathBuf> {
    let out_root = &cfg.paths.output;
    let in_root = common_root(cfg);
    let mut seeds = record.seeds.clone();
    seeds.insert("master".into(), cfg.seeds.master);
    let manifest = Manifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: nonanswer_core::VERSION.to_string(),
        prompt_template: TEMPLATE_VERSION.to_string(),
        config_sha256: sha256_hex(cfg.canonical().as_bytes()),
        seeds,
        inputs: hashes(&record.inputs, &in_root)?,
        outputs: hashes(&record.outputs, out_root)?,
    };
    let path = out_root.join(MANIFEST_DIR).join(format!("{command}.json"));
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    io::write_text(&path, &text)?;
    Ok(path)
}

/// Deepest directory containing every configured input directory.
fn common_root(cfg: &RunConfig) -> PathBuf {
    let dirs = [&cfg.paths.corpus, &cfg.paths.lexicon, &cfg.paths.data];
    let mut root = dirs[0].clone();
    while !dirs.iter().all(|d| d.starts_with(&root)) {
        if !root.pop() {
            return PathBuf::new();
        }
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path();
        std::fs::create_dir_all(base.join("data/corpus")).unwrap();
        std::fs::write(base.join("data/corpus/a.txt"), "x").unwrap();
        let cfg = RunConfig::from_toml(
            "[paths]\ncorpus = \"data/corpus\"\nlexicon = \"data/lex\"\ndata = \"data\"\noutput = \"out\"\n",
            &[],
            base,
        )
        .unwrap();
        let mut rec = StageRecord::default();
        rec.input(base.join("data/corpus"));
        std::fs::create_dir_all(base.join("out")).unwrap();
        std::fs::write(base.join("out/r.csv"), "a\n1\n").unwrap();
        rec.output(base.join("out/r.csv"));
        rec.seed("boot", 7);
        let p = write_manifest(&cfg, "test", &rec).unwrap();
        let first = std::fs::read_to_string(&p).unwrap();
        write_manifest(&cfg, "test", &rec).unwrap();
        assert_eq!(first, std::fs::read_to_string(&p).unwrap());
        let m: Manifest = serde_json::from_str(&first).unwrap();
        assert!(m.inputs.contains_key("corpus/a.txt"));
        assert!(m.outputs.contains_key("r.csv"));
        assert_eq!(m.seeds["boot"], 7);
        assert_eq!(m.config_sha256.len(), 64);
    }
}
