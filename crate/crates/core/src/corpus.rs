//! Transcript parsing, Q&A exchange segmentation and corpus de-duplication.
//!
//! Input documents are line oriented:
//!
//! ```text
//! #id: T100
//! #firm: F001
//! #quarter: 2020Q3
//! #version: 2
//! [PRESENTATION]
//! Prepared remarks, any number of lines.
//! [QA]
//! [Operator]: Our first question comes from Jane Doe.
//! [Analyst][Jane Doe]: How much?
//! [Manager][John Roe]: Ten dollars.
//! ```
//!
//! Operator turns are kept in [`Transcript::qa_turns`] but never enter an
//! exchange. A new exchange starts when an analyst takes the floor right after
//! a manager turn and either the analyst differs from the previous one or the
//! operator spoke in between; same-analyst follow-ups stay in one exchange.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::Quarter;
use crate::text::{normalize_whitespace, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Analyst,
    Manager,
    Operator,
    Other,
}

impl Role {
    /// Accepts the canonical names plus the vendor spellings seen in the wild
    /// (`Analysts`, `Executives`, `Moderator`, ...), case-insensitively.
    pub fn parse(tag: &str) -> Option<Role> {
        let t = tag.trim().to_ascii_lowercase();
        let role = match t.as_str() {
            "analyst" | "analysts" => Role::Analyst,
            "manager" | "managers" | "executive" | "executives" | "management" => Role::Manager,
            "operator" | "moderator" => Role::Operator,
            "other" | "others" | "attendee" | "participant" => Role::Other,
            _ => return None,
        };
        Some(role)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Analyst => "Analyst",
            Role::Manager => "Manager",
            Role::Operator => "Operator",
            Role::Other => "Other",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(rename = "speaker_role")]
    pub role: Role,
    #[serde(rename = "speaker_name")]
    pub name: Option<String>,
    pub text: String,
}

impl Turn {
    /// Builds a turn with whitespace-normalized text; `None` if the text is
    /// empty after normalization.
    pub fn new(role: Role, name: Option<&str>, text: &str) -> Option<Turn> {
        let text = normalize_whitespace(text);
        if text.is_empty() {
            return None;
        }
        let name = name.map(str::trim).filter(|n| !n.is_empty()).map(String::from);
        Some(Turn { role, name, text })
    }
}

/// One analyst's back-and-forth with management.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExchange {
    pub conver_id: String,
    pub order: u32,
    pub turns: Vec<Turn>,
}

impl QaExchange {
    pub fn turns_by(&self, role: Role) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(move |t| t.role == role)
    }

    /// The transcript id part of `conver_id`.
    pub fn transcript_id(&self) -> &str {
        self.conver_id
            .rsplit_once('-')
            .map(|(id, _)| id)
            .unwrap_or(&self.conver_id)
    }
}

/// Total token count over every turn of the exchange.
pub fn exchange_word_count(x: &QaExchange) -> usize {
    x.turns.iter().map(|t| word_count(&t.text)).sum()
}

pub fn conver_id(transcript_id: &str, order: u32) -> String {
    format!("{transcript_id}-{order}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub transcript_id: String,
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub version: u32,
    pub presentation: String,
    /// Every Q&A turn in document order, operator turns included.
    pub qa_turns: Vec<Turn>,
    pub exchanges: Vec<QaExchange>,
}

impl Transcript {
    pub fn new(
        transcript_id: &str,
        firm_id: &str,
        fiscal_quarter: Quarter,
        version: u32,
        presentation: &str,
        qa_turns: Vec<Turn>,
    ) -> Transcript {
        let exchanges = segment_exchanges(transcript_id, &qa_turns);
        Transcript {
            transcript_id: transcript_id.to_string(),
            firm_id: firm_id.to_string(),
            fiscal_quarter,
            version,
            presentation: presentation.to_string(),
            qa_turns,
            exchanges,
        }
    }

    /// Presentation followed by every exchange turn, space separated. Its
    /// token count equals the presentation count plus the exchange counts.
    pub fn analyzed_text(&self) -> String {
        let mut out = self.presentation.clone();
        for t in self.exchanges.iter().flat_map(|x| &x.turns) {
            out.push(' ');
            out.push_str(&t.text);
        }
        out
    }

    /// Canonical document text; `parse_transcript` of it reproduces `self`.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#id: {}\n", self.transcript_id));
        out.push_str(&format!("#firm: {}\n", self.firm_id));
        out.push_str(&format!("#quarter: {}\n", self.fiscal_quarter));
        out.push_str(&format!("#version: {}\n", self.version));
        out.push_str("[PRESENTATION]\n");
        out.push_str(&self.presentation);
        out.push_str("\n[QA]\n");
        for t in &self.qa_turns {
            match &t.name {
                Some(n) => out.push_str(&format!("[{}][{}]: {}\n", t.role, n, t.text)),
                None => out.push_str(&format!("[{}]: {}\n", t.role, t.text)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed document (line {line}): {reason}")]
pub struct MalformedDocument {
    pub line: usize,
    pub reason: String,
}

fn malformed(line: usize, reason: impl Into<String>) -> MalformedDocument {
    MalformedDocument {
        line,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    Header,
    Presentation,
    Qa,
}

/// Parses one transcript document.
pub fn parse_transcript(raw: &str) -> Result<Transcript, MalformedDocument> {
    let mut id = None;
    let mut firm = None;
    let mut quarter = None;
    let mut version = None;
    let mut block = Block::Header;
    let mut presentation: Vec<&str> = Vec::new();
    let mut turns = Vec::new();

    for (i, line) in raw.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.eq_ignore_ascii_case("[PRESENTATION]") {
            if block != Block::Header {
                return Err(malformed(lineno, "duplicate [PRESENTATION] block"));
            }
            block = Block::Presentation;
            continue;
        }
        if trimmed.eq_ignore_ascii_case("[QA]") {
            if block != Block::Presentation {
                return Err(malformed(lineno, "[QA] block must follow [PRESENTATION]"));
            }
            block = Block::Qa;
            continue;
        }
        match block {
            Block::Header => {
                if trimmed.is_empty() {
                    continue;
                }
                let Some(rest) = trimmed.strip_prefix('#') else {
                    return Err(malformed(lineno, "text before [PRESENTATION]"));
                };
                let Some((key, value)) = rest.split_once(':') else {
                    continue; // plain comment
                };
                let value = value.trim();
                match key.trim().to_ascii_lowercase().as_str() {
                    "id" => id = Some(value.to_string()),
                    "firm" => firm = Some(value.to_string()),
                    "quarter" => {
                        quarter = Some(
                            value
                                .parse::<Quarter>()
                                .map_err(|e| malformed(lineno, e.to_string()))?,
                        )
                    }
                    "version" => {
                        version = Some(value.parse::<u32>().map_err(|_| {
                            malformed(lineno, format!("invalid version `{value}`"))
                        })?)
                    }
                    _ => {}
                }
            }
            Block::Presentation => presentation.push(line.trim_end()),
            Block::Qa => {
                if trimmed.is_empty() {
                    continue;
                }
                let (role, name, text) =
                    parse_speaker_line(trimmed).ok_or_else(|| malformed(lineno, "untagged speaker line"))?;
                let turn = Turn::new(role, name, text)
                    .ok_or_else(|| malformed(lineno, "empty speaker turn"))?;
                turns.push(turn);
            }
        }
    }

    let missing = |field: &str| malformed(0, format!("missing header field #{field}"));
    let id = id.filter(|s| !s.is_empty()).ok_or_else(|| missing("id"))?;
    let firm = firm.filter(|s| !s.is_empty()).ok_or_else(|| missing("firm"))?;
    let quarter = quarter.ok_or_else(|| missing("quarter"))?;
    let version = version.ok_or_else(|| missing("version"))?;
    if block != Block::Qa {
        return Err(malformed(0, "missing [PRESENTATION] or [QA] block"));
    }

    while presentation.first().is_some_and(|l| l.trim().is_empty()) {
        presentation.remove(0);
    }
    while presentation.last().is_some_and(|l| l.trim().is_empty()) {
        presentation.pop();
    }
    let presentation = presentation.join("\n");
    if presentation.trim().is_empty() {
        return Err(malformed(0, "empty presentation"));
    }

    Ok(Transcript::new(&id, &firm, quarter, version, &presentation, turns))
}

/// `[Role][Name]: text` or `[Role]: text`.
fn parse_speaker_line(line: &str) -> Option<(Role, Option<&str>, &str)> {
    let rest = line.strip_prefix('[')?;
    let close = rest.find(']')?;
    let role = Role::parse(&rest[..close])?;
    let mut rest = &rest[close + 1..];
    let mut name = None;
    if let Some(r) = rest.strip_prefix('[') {
        let close = r.find(']')?;
        name = Some(&r[..close]);
        rest = &r[close + 1..];
    }
    let text = rest.trim_start().strip_prefix(':')?;
    Some((role, name, text))
}

fn analyst_changed(previous: Option<&Option<String>>, current: &Option<String>) -> bool {
    match (previous, current) {
        (Some(Some(a)), Some(b)) => !a.eq_ignore_ascii_case(b),
        // Unnamed analysts cannot be matched to a previous speaker.
        _ => true,
    }
}

/// Splits Q&A turns into exchanges. Groups lacking either an analyst or a
/// manager turn (e.g. leading management remarks) are discarded and the
/// surviving exchanges are numbered `1..=K`.
pub fn segment_exchanges(transcript_id: &str, turns: &[Turn]) -> Vec<QaExchange> {
    let mut groups: Vec<Vec<Turn>> = Vec::new();
    let mut current: Vec<Turn> = Vec::new();
    let mut last_analyst: Option<Option<String>> = None;
    let mut prev_role: Option<Role> = None;
    let mut operator_spoke = false;

    for turn in turns {
        match turn.role {
            Role::Operator => {
                operator_spoke = true;
                continue;
            }
            Role::Analyst => {
                let starts_new = !current.is_empty()
                    && prev_role == Some(Role::Manager)
                    && (operator_spoke || analyst_changed(last_analyst.as_ref(), &turn.name));
                if starts_new {
                    groups.push(core::mem::take(&mut current));
                }
                last_analyst = Some(turn.name.clone());
                prev_role = Some(Role::Analyst);
            }
            Role::Manager => prev_role = Some(Role::Manager),
            Role::Other => {}
        }
        operator_spoke = false;
        current.push(turn.clone());
    }
    if !current.is_empty() {
        groups.push(current);
    }

    groups
        .into_iter()
        .filter(|g| g.iter().any(|t| t.role == Role::Analyst) && g.iter().any(|t| t.role == Role::Manager))
        .enumerate()
        .map(|(i, turns)| {
            let order = i as u32 + 1;
            QaExchange {
                conver_id: conver_id(transcript_id, order),
                order,
                turns,
            }
        })
        .collect()
}

/// Why a transcript was removed by [`dedupe_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    SupersededVersion { kept_version: u32 },
    MultipleFirms,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTranscript {
    pub transcript_id: String,
    pub firm_id: String,
    pub version: u32,
    pub conversations: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default)]
pub struct DedupeOutcome {
    /// Survivors sorted by `(transcript_id, firm_id, fiscal_quarter)`.
    pub kept: Vec<Transcript>,
    pub dropped: Vec<DroppedTranscript>,
}

/// Keeps the latest version of each transcript and removes transcript ids
/// that appear under more than one firm.
pub fn dedupe_corpus(transcripts: Vec<Transcript>) -> DedupeOutcome {
    let mut firms: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in &transcripts {
        firms
            .entry(t.transcript_id.clone())
            .or_default()
            .insert(t.firm_id.clone());
    }

    let mut out = DedupeOutcome::default();
    let mut best: BTreeMap<(String, String, Quarter), Transcript> = BTreeMap::new();
    for t in transcripts {
        if firms[&t.transcript_id].len() > 1 {
            out.dropped.push(DroppedTranscript {
                transcript_id: t.transcript_id.clone(),
                firm_id: t.firm_id.clone(),
                version: t.version,
                conversations: t.exchanges.len(),
                reason: DropReason::MultipleFirms,
            });
            continue;
        }
        let key = (t.transcript_id.clone(), t.firm_id.clone(), t.fiscal_quarter);
        match best.get(&key) {
            Some(cur) if cur.version >= t.version => {
                let kept_version = cur.version;
                out.dropped.push(dropped_version(&t, kept_version));
            }
            _ => {
                if let Some(old) = best.insert(key, t) {
                    out.dropped.push(dropped_version(&old, u32::MAX));
                }
            }
        }
    }
    // Superseded entries recorded before the final winner was known.
    for d in &mut out.dropped {
        if let DropReason::SupersededVersion { kept_version } = &mut d.reason {
            if *kept_version == u32::MAX {
                *kept_version = best
                    .iter()
                    .find(|((id, firm, _), _)| id == &d.transcript_id && firm == &d.firm_id)
                    .map(|(_, t)| t.version)
                    .unwrap_or(0);
            }
        }
    }
    out.kept = best.into_values().collect();
    out
}

fn dropped_version(t: &Transcript, kept_version: u32) -> DroppedTranscript {
    DroppedTranscript {
        transcript_id: t.transcript_id.clone(),
        firm_id: t.firm_id.clone(),
        version: t.version,
        conversations: t.exchanges.len(),
        reason: DropReason::SupersededVersion { kept_version },
    }
}
