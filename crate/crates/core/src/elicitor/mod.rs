//! Prompting models for non-responses: rendering the three-task few-shot
//! prompt for an exchange, the backend abstraction, and validation of the
//! free-text replies into [`NorAnnotation`]s.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{QaExchange, Role};

mod heuristic;
mod reply;

pub use heuristic::{classify_answer, CueProfile, HeuristicBackend};
pub use reply::{to_reply_json, validate_reply};

/// System message sent with every request.
pub const SYSTEM_MESSAGE: &str = "You are a helpful research assistant in accounting and finance.";

/// The user-prompt template. Everything except [`STATEMENT_SLOT`] is sent
/// byte-for-byte.
pub const PROMPT_TEMPLATE: &str = include_str!("prompt_template.txt");

pub const STATEMENT_SLOT: &str = "{{STATEMENT}}";

/// Bumped whenever [`PROMPT_TEMPLATE`] or the statement rendering changes;
/// part of the prompt hash so cached annotations are invalidated.
pub const TEMPLATE_VERSION: &str = "nor-prompt/1";

/// Template text before and after the statement slot.
pub fn template_parts() -> (&'static str, &'static str) {
    PROMPT_TEMPLATE
        .split_once(STATEMENT_SLOT)
        .expect("template has a statement slot")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptParams {
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for PromptParams {
    fn default() -> Self {
        PromptParams {
            temperature: 0.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            max_tokens: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub conver_id: String,
    pub system_message: String,
    pub user_prompt: String,
    pub params: PromptParams,
}

impl PromptRequest {
    /// Hex SHA-256 over template version, messages and parameters.
    pub fn prompt_hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [
            TEMPLATE_VERSION,
            self.system_message.as_str(),
            self.user_prompt.as_str(),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let p = &self.params;
        for v in [p.temperature, p.frequency_penalty, p.presence_penalty] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(p.max_tokens.to_le_bytes());
        let mut out = String::with_capacity(64);
        for b in h.finalize().iter() {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// The statement slot content of the user prompt.
    pub fn statement(&self) -> Option<&str> {
        statement_of(&self.user_prompt)
    }
}

fn escape_quoted(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Renders exchange turns as `[Role][Name]: "text"` lines separated by a
/// blank line. Quotes and backslashes inside the text are escaped.
pub fn render_statement(x: &QaExchange) -> String {
    let mut lines = Vec::with_capacity(x.turns.len());
    for t in &x.turns {
        if t.role == Role::Operator {
            continue;
        }
        let text = escape_quoted(&t.text);
        lines.push(match &t.name {
            Some(n) => format!("[{}][{}]: \"{}\"", t.role, n, text),
            None => format!("[{}]: \"{}\"", t.role, text),
        });
    }
    lines.join("\n\n")
}

pub fn render_prompt(x: &QaExchange) -> PromptRequest {
    render_prompt_with(x, PromptParams::default())
}

pub fn render_prompt_with(x: &QaExchange, params: PromptParams) -> PromptRequest {
    let (before, after) = template_parts();
    let statement = render_statement(x);
    let mut user_prompt = String::with_capacity(before.len() + statement.len() + after.len());
    user_prompt.push_str(before);
    user_prompt.push_str(&statement);
    user_prompt.push_str(after);
    PromptRequest {
        conver_id: x.conver_id.clone(),
        system_message: SYSTEM_MESSAGE.to_string(),
        user_prompt,
        params,
    }
}

/// Extracts the statement from a prompt rendered with [`PROMPT_TEMPLATE`].
pub fn statement_of(user_prompt: &str) -> Option<&str> {
    let (before, after) = template_parts();
    user_prompt.strip_prefix(before)?.strip_suffix(after)
}

/// Non-response categories offered to the model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Refusal,
    LackOfInfo,
    LegalAffairs,
    Recall,
    Irrelevant,
    /// A label outside the taxonomy, kept verbatim.
    Other(String),
}

impl Category {
    pub const KNOWN: [Category; 5] = [
        Category::Refusal,
        Category::LackOfInfo,
        Category::LegalAffairs,
        Category::Recall,
        Category::Irrelevant,
    ];

    /// Maps a model label to a category. Returns `None` for null-like labels
    /// and for numbers.
    pub fn from_label(label: &str) -> Option<Category> {
        let t = label.trim().trim_matches(|c| c == '"' || c == '\'').trim();
        let key: String = t
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if key.is_empty() || matches!(key.as_str(), "null" | "none" | "na") {
            return None;
        }
        if key.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        Some(match key.as_str() {
            "refusal" | "directrefusal" | "refuse" => Category::Refusal,
            "lackofinfo" | "lackofinformation" | "lack" | "lackinfo" => Category::LackOfInfo,
            "legalaffairs" | "legal" | "legalconcerns" | "legalaffair" => Category::LegalAffairs,
            "recall" | "futurerecall" => Category::Recall,
            "irrelevant" | "irrelevance" | "irrelevantanswer" => Category::Irrelevant,
            _ => Category::Other(t.to_string()),
        })
    }

    pub fn label(&self) -> &str {
        match self {
            Category::Refusal => "Refusal",
            Category::LackOfInfo => "Lack of Info",
            Category::LegalAffairs => "Legal Affairs",
            Category::Recall => "Recall",
            Category::Irrelevant => "Irrelevant",
            Category::Other(s) => s,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Category::from_label(&s).unwrap_or(Category::Other(s)))
    }
}

/// Number of non-responses in an exchange, or a reply that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NorCount {
    Count(u8),
    Error,
}

impl NorCount {
    pub fn count(self) -> Option<u8> {
        match self {
            NorCount::Count(n) => Some(n),
            NorCount::Error => None,
        }
    }

    pub fn is_error(self) -> bool {
        self == NorCount::Error
    }
}

impl Serialize for NorCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NorCount::Count(n) => s.serialize_u8(*n),
            NorCount::Error => s.serialize_str("ERROR"),
        }
    }
}

impl<'de> Deserialize<'de> for NorCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = NorCount;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a count 0..=3 or \"ERROR\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<NorCount, E> {
                u8::try_from(v)
                    .map(NorCount::Count)
                    .map_err(|_| E::custom("count out of range"))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<NorCount, E> {
                self.visit_u64(u64::try_from(v).map_err(|_| E::custom("negative count"))?)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<NorCount, E> {
                if v.eq_ignore_ascii_case("error") {
                    Ok(NorCount::Error)
                } else {
                    Err(E::custom("expected \"ERROR\""))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// A question/answer excerpt the model flagged as a non-response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcerptPair {
    pub question: String,
    pub answer: String,
}

/// One model's validated reply for one exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NorAnnotation {
    pub conver_id: String,
    pub model_id: String,
    pub nor_count: NorCount,
    pub pairs: Vec<ExcerptPair>,
    /// One label per non-response.
    pub category: Vec<Category>,
    pub quantity: Option<u8>,
    pub relevance: Option<u8>,
    pub clarity: Option<u8>,
    /// Count reported by the model when it exceeded 3 and was clamped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped_from: Option<i64>,
    pub raw: String,
}

impl NorAnnotation {
    pub fn error(raw: &str) -> NorAnnotation {
        NorAnnotation {
            conver_id: String::new(),
            model_id: String::new(),
            nor_count: NorCount::Error,
            pairs: Vec::new(),
            category: Vec::new(),
            quantity: None,
            relevance: None,
            clarity: None,
            clamped_from: None,
            raw: raw.to_string(),
        }
    }

    pub fn with_ids(mut self, conver_id: &str, model_id: &str) -> NorAnnotation {
        self.conver_id = conver_id.to_string();
        self.model_id = model_id.to_string();
        self
    }

    pub fn is_error(&self) -> bool {
        self.nor_count.is_error()
    }

    /// 1 when at least one non-response was found; `None` for errors.
    pub fn nor_indicator(&self) -> Option<u8> {
        self.nor_count.count().map(|n| u8::from(n > 0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Worth retrying (rate limits, timeouts, 5xx).
    #[error("transient backend failure{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transient { status: Option<u16>, message: String },
    #[error("backend failure: {0}")]
    Fatal(String),
}

/// Something that turns a prompt into a completion.
pub trait ModelBackend {
    fn model_id(&self) -> &str;
    fn send(&self, request: &PromptRequest) -> Result<String, BackendError>;
}
