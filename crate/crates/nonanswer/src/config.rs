//! Run configuration. The file is TOML (`key = value` lines under
//! `[section]` headers); `--set section.key=value` flags override it.

use std::path::{Path, PathBuf};

use nonanswer_core::elicitor::PromptParams;
use nonanswer_core::lexicon::{FogOptions, TurnScope};
use nonanswer_core::panel::controls::HrdBasis;
use nonanswer_core::stats::SeKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of transcript files.
    pub corpus: PathBuf,
    /// Directory with positive.txt, negative.txt, uncertainty.txt, forward.txt.
    pub lexicon: PathBuf,
    /// Directory with the forecast, fundamentals, market and incentive CSVs.
    pub data: PathBuf,
    pub cache: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "data/synthetic/transcripts".into(),
            lexicon: "data/lexicon".into(),
            data: "data/synthetic".into(),
            cache: "out/cache".into(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Heuristic,
    Conservative,
    Scripted,
    Remote,
}

/// One model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: BackendKind,
    pub model_id: String,
    /// Remote endpoint URL.
    pub endpoint: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    /// Scripted fixture (JSONL of `{conver_id, completion}`).
    pub script: PathBuf,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: BackendKind::Heuristic,
            model_id: "heuristic-full".into(),
            endpoint: String::new(),
            api_key_env: "NONANSWER_API_KEY".into(),
            script: PathBuf::new(),
        }
    }
}

impl ModelConfig {
    fn default_alt() -> ModelConfig {
        ModelConfig {
            kind: BackendKind::Conservative,
            model_id: "heuristic-conservative".into(),
            ..ModelConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backend {
    pub primary: ModelConfig,
    /// Second model for the overlap and alternative-measure analyses.
    pub alternative: ModelConfig,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First retry delay; doubled on every further retry.
    pub backoff_ms: u64,
    pub jobs: usize,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for Backend {
    fn default() -> Self {
        let p = PromptParams::default();
        Backend {
            primary: ModelConfig::default(),
            alternative: ModelConfig::default_alt(),
            timeout_secs: 120,
            max_retries: 3,
            backoff_ms: 500,
            jobs: 4,
            temperature: p.temperature,
            frequency_penalty: p.frequency_penalty,
            presence_penalty: p.presence_penalty,
            max_tokens: p.max_tokens,
        }
    }
}

impl Backend {
    pub fn params(&self) -> PromptParams {
        PromptParams {
            temperature: self.temperature,
            frequency_penalty: self.frequency_penalty,
            presence_penalty: self.presence_penalty,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Analyst,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeTransform {
    Log,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Text {
    pub fog_min_syllables: usize,
    pub turn_scope: Scope,
}

impl Default for Text {
    fn default() -> Self {
        Text {
            fog_min_syllables: FogOptions::default().complex_min_syllables,
            turn_scope: Scope::Analyst,
        }
    }
}

impl Text {
    pub fn fog(&self) -> FogOptions {
        FogOptions {
            complex_min_syllables: self.fog_min_syllables,
        }
    }

    pub fn scope(&self) -> TurnScope {
        match self.turn_scope {
            Scope::Analyst => TurnScope::AnalystOnly,
            Scope::All => TurnScope::AllTurns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hrd {
    Intangible,
    Rd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeChoice {
    Cr1,
    Cr0,
    Hc1,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stats {
    pub winsor_lower: f64,
    pub winsor_upper: f64,
    pub winsor_by_quarter: bool,
    pub volume: VolumeTransform,
    pub hrd_basis: Hrd,
    pub se: SeChoice,
    pub permutations: usize,
    pub bootstrap_iterations: usize,
    pub histogram_bins: usize,
    pub stability_sample: usize,
    pub stability_runs: usize,
}

impl Default for Stats {
    fn default() -> Self {
        Stats {
            winsor_lower: 0.01,
            winsor_upper: 0.99,
            winsor_by_quarter: false,
            volume: VolumeTransform::Log,
            hrd_basis: Hrd::Intangible,
            se: SeChoice::Cr1,
            permutations: 10_000,
            bootstrap_iterations: 100_000,
            histogram_bins: 50,
            stability_sample: 100,
            stability_runs: 100,
        }
    }
}

impl Stats {
    pub fn se_kind(&self) -> SeKind {
        match self.se {
            SeChoice::Cr1 => SeKind::Cr1,
            SeChoice::Cr0 => SeKind::Cr0,
            SeChoice::Hc1 => SeKind::Hc1,
            SeChoice::Classical => SeKind::Classical,
        }
    }

    pub fn hrd(&self) -> HrdBasis {
        match self.hrd_basis {
            Hrd::Intangible => HrdBasis::IntangibleAssets,
            Hrd::Rd => HrdBasis::RdExpense,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecLevel {
    #[default]
    Firm,
    Individual,
    Conversation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeChoice {
    #[default]
    Both,
    Firm,
    Quarter,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Ols,
    Logit,
}

/// A user-declared regression, estimated by `regress` next to the
/// built-in tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecEntry {
    pub name: String,
    pub level: SpecLevel,
    pub estimator: Estimator,
    pub dependent: String,
    pub regressors: Vec<String>,
    pub interactions: Vec<[String; 2]>,
    pub fixed_effects: FeChoice,
    /// Cluster column; empty for none.
    pub cluster: Option<String>,
    /// Conditions such as `COVID == 1`.
    pub filter: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { master: 20_240_101 }
    }
}

impl Seeds {
    /// Stream seed for one named use, derived from the master seed.
    pub fn derive(&self, purpose: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.master.to_le_bytes());
        h.update(purpose.as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub backend: Backend,
    pub text: Text,
    pub stats: Stats,
    pub seeds: Seeds,
    pub spec: Vec<SpecEntry>,
}

fn parse_override(item: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{item}` is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Usage(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    // Values that are not valid TOML literals are taken as strings.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = root;
    for p in parents {
        table = table
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("`{p}` is not a section")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Parses a config text, applies overrides and resolves relative paths
    /// against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<RunConfig> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {e}")))?;
        for o in overrides {
            let (path, value) = parse_override(o)?;
            apply_override(&mut table, &path, value)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {e}")))?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` when given, defaults otherwise.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let base = p.parent().unwrap_or(Path::new("."));
                RunConfig::from_toml(&text, overrides, base)
            }
            None => RunConfig::from_toml("", overrides, Path::new(".")),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [&mut paths.corpus, &mut paths.lexicon, &mut paths.data, &mut paths.cache, &mut paths.output] {
            fix(p);
        }
        fix(&mut self.backend.primary.script);
        fix(&mut self.backend.alternative.script);
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.stats;
        if !(0.0..0.5).contains(&s.winsor_lower) || !(0.5..=1.0).contains(&s.winsor_upper) {
            return Err(CliError::Usage("winsorization bounds must satisfy 0 <= lower < 0.5 <= upper <= 1".into()));
        }
        if self.backend.jobs == 0 {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        if s.permutations == 0 {
            return Err(CliError::Usage("permutations must be positive".into()));
        }
        if self.backend.primary.model_id == self.backend.alternative.model_id {
            return Err(CliError::Usage("primary and alternative models need distinct model_id values".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for spec in &self.spec {
            if spec.name.is_empty() || !names.insert(&spec.name) {
                return Err(CliError::Usage(format!("spec name `{}` is empty or repeated", spec.name)));
            }
        }
        Ok(())
    }

    /// Canonical serialization, hashed into the manifest. The worker count
    /// does not change any output and is left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.backend.jobs = 0;
        toml::to_string(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_toml(
            "[stats]\npermutations = 500\n[backend]\njobs = 2\n",
            &["stats.permutations=77".into(), "text.turn_scope=all".into(), "backend.primary.model_id=gpt".into()],
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.stats.permutations, 77);
        assert_eq!(cfg.backend.jobs, 2);
        assert_eq!(cfg.text.turn_scope, Scope::All);
        assert_eq!(cfg.backend.primary.model_id, "gpt");
        assert_eq!(cfg.paths.output, Path::new("/base/out"));
        assert_eq!(cfg.stats.winsor_upper, 0.99);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::from_toml("[stats]\nfoo = 1\n", &[], Path::new(".")), Err(CliError::Usage(_))));
        assert!(RunConfig::from_toml("", &["stats.winsor_lower=0.7".into()], Path::new(".")).is_err());
        assert!(RunConfig::from_toml("", &["nokey".into()], Path::new(".")).is_err());
    }

    #[test]
    fn spec_table() {
        let cfg = RunConfig::from_toml(
            "[[spec]]\nname = \"covid_only\"\ndependent = \"Dispersion\"\nregressors = [\"NOR_Firm\"]\nfilter = [\"COVID == 1\"]\n",
            &[],
            Path::new("."),
        )
        .unwrap();
        assert_eq!(cfg.spec[0].fixed_effects, FeChoice::Both);
        assert_eq!(cfg.spec[0].filter, vec!["COVID == 1".to_string()]);
    }

    #[test]
    fn derived_seeds_differ_by_purpose() {
        let s = Seeds::default();
        assert_ne!(s.derive("bootstrap"), s.derive("permutation"));
        assert_eq!(s.derive("bootstrap"), s.derive("bootstrap"));
    }
}
