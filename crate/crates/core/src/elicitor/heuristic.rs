//! Offline cue-phrase backend. It reads the statement back out of the
//! rendered prompt, flags manager turns containing non-response cues and
//! replies in the prompt's JSON schema.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    statement_of, to_reply_json, BackendError, Category, ExcerptPair, ModelBackend, NorAnnotation,
    NorCount, PromptRequest,
};
use crate::corpus::Role;

const LEGAL: &[&str] = &[
    "litigation",
    "legal reasons",
    "pending legal",
    "ongoing legal",
    "legal proceeding",
    "under investigation",
    "advice of counsel",
    "advised by counsel",
    "ongoing investigation",
    "regulatory restrictions prevent",
];

const REFUSAL: &[&str] = &[
    "can't answer",
    "cannot answer",
    "won't answer",
    "can't comment",
    "cannot comment",
    "won't comment",
    "not going to comment",
    "don't comment on",
    "decline to",
    "not going to get into",
    "won't get into",
    "prefer not to",
    "not going to provide",
    "not going to disclose",
    "don't disclose",
    "don't break that out",
    "not in a position to",
];

const RECALL: &[&str] = &[
    "get back to you",
    "follow up with you",
    "follow up offline",
    "take that offline",
    "circle back",
    "come back to you",
];

const LACK: &[&str] = &[
    "don't know",
    "do not know",
    "don't have that",
    "don't have the",
    "don't have visibility",
    "no visibility",
    "too early to tell",
    "too early to say",
    "hard to say",
    "not sure",
    "don't have a good answer",
];

const IRRELEVANT: &[&str] = &[
    "different question",
    "rather talk about",
    "rather focus on",
    "let me talk about something",
];

/// Which cue classes a backend recognizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CueProfile {
    /// All five categories.
    #[default]
    Full,
    /// Refusal, lack of information and legal cues only; flags a subset of
    /// what `Full` flags.
    Conservative,
}

impl CueProfile {
    fn classes(self) -> &'static [(Category, &'static [&'static str])] {
        // Priority order: the first matching class labels the turn.
        const FULL: [(Category, &[&str]); 5] = [
            (Category::LegalAffairs, LEGAL),
            (Category::Refusal, REFUSAL),
            (Category::Recall, RECALL),
            (Category::LackOfInfo, LACK),
            (Category::Irrelevant, IRRELEVANT),
        ];
        const CONSERVATIVE: [(Category, &[&str]); 3] = [
            (Category::LegalAffairs, LEGAL),
            (Category::Refusal, REFUSAL),
            (Category::LackOfInfo, LACK),
        ];
        match self {
            CueProfile::Full => &FULL,
            CueProfile::Conservative => &CONSERVATIVE,
        }
    }
}

fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut space = true;
    for c in text.chars() {
        let c = match c {
            '\u{2019}' | '\u{2018}' | '`' => '\'',
            c if c.is_whitespace() => ' ',
            c => c,
        };
        if c == ' ' {
            if !space {
                out.push(' ');
            }
            space = true;
        } else {
            out.extend(c.to_lowercase());
            space = false;
        }
    }
    out
}

/// The non-response category signalled by a manager answer, if any.
pub fn classify_answer(text: &str, profile: CueProfile) -> Option<Category> {
    let folded = fold(text);
    profile
        .classes()
        .iter()
        .find(|(_, cues)| cues.iter().any(|c| folded.contains(c)))
        .map(|(cat, _)| cat.clone())
}

/// Category baseline for (quantity, relevance, clarity).
fn base_scores(category: Option<&Category>) -> (i32, i32, i32) {
    match category {
        None => (6, 9, 9),
        Some(Category::Refusal) => (3, 4, 8),
        Some(Category::LackOfInfo) => (5, 8, 9),
        Some(Category::LegalAffairs) => (4, 7, 9),
        Some(Category::Recall) => (6, 8, 9),
        Some(Category::Irrelevant) | Some(Category::Other(_)) => (3, 2, 6),
    }
}

fn content_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| w.chars().count() >= 6)
        .map(|w| w.to_lowercase())
        .collect()
}

/// Scores of an exchange: the first flagged category sets the baseline;
/// figures in the answers move quantity, answers sharing no content word
/// with the questions lose relevance, long sentences lose clarity.
fn scores(category: Option<&Category>, questions: &str, answers: &str) -> (u8, u8, u8) {
    let (q, r, c) = base_scores(category);
    let figures = answers
        .split_whitespace()
        .filter(|t| t.chars().any(|c| c.is_ascii_digit()))
        .count() as i32;
    let asked = content_words(questions);
    let on_topic = content_words(answers).iter().any(|w| asked.contains(w));
    let sentences = answers.split(['.', '?', '!']).filter(|s| !s.trim().is_empty()).count().max(1);
    let words_per_sentence = answers.split_whitespace().count() / sentences;
    let clamp = |v: i32| v.clamp(0, 10) as u8;
    (
        clamp(q + (figures - 1).clamp(-2, 2)),
        clamp(if on_topic { r } else { r - 2 }),
        clamp(if words_per_sentence > 25 { c - 2 } else { c }),
    )
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parses one `[Role][Name]: "text"` statement line.
fn parse_statement_line(line: &str) -> Option<(Role, String)> {
    let rest = line.trim().strip_prefix('[')?;
    let (tag, rest) = rest.split_once(']')?;
    let role = Role::parse(tag)?;
    let rest = match rest.strip_prefix('[') {
        Some(named) => named.split_once(']')?.1,
        None => rest,
    };
    let body = rest.trim_start().strip_prefix(':')?.trim();
    let body = body.strip_prefix('"')?.strip_suffix('"')?;
    Some((role, unescape(body)))
}

fn statement_turns(statement: &str) -> Vec<(Role, String)> {
    statement
        .split("\n\n")
        .filter_map(parse_statement_line)
        .collect()
}

/// Deterministic stand-in for a hosted model.
#[derive(Debug, Clone)]
pub struct HeuristicBackend {
    model_id: String,
    profile: CueProfile,
}

impl HeuristicBackend {
    pub fn new(model_id: &str, profile: CueProfile) -> HeuristicBackend {
        HeuristicBackend {
            model_id: model_id.to_string(),
            profile,
        }
    }

    pub fn profile(&self) -> CueProfile {
        self.profile
    }

    /// The reply for a bare statement.
    pub fn reply_for_statement(&self, statement: &str) -> String {
        let mut pairs = Vec::new();
        let mut category = Vec::new();
        let mut question = String::new();
        let (mut questions, mut answers) = (String::new(), String::new());
        for (role, text) in statement_turns(statement) {
            match role {
                Role::Analyst => {
                    questions.push_str(&text);
                    questions.push(' ');
                    question = text;
                }
                Role::Manager => {
                    answers.push_str(&text);
                    answers.push(' ');
                    if let Some(cat) = classify_answer(&text, self.profile) {
                        pairs.push(ExcerptPair {
                            question: question.clone(),
                            answer: text,
                        });
                        category.push(cat);
                    }
                }
                _ => {}
            }
        }
        pairs.truncate(3);
        category.truncate(3);
        let (quantity, relevance, clarity) = scores(category.first(), &questions, &answers);
        let annotation = NorAnnotation {
            nor_count: NorCount::Count(pairs.len() as u8),
            pairs,
            category,
            quantity: Some(quantity),
            relevance: Some(relevance),
            clarity: Some(clarity),
            ..NorAnnotation::error("")
        };
        to_reply_json(&annotation)
    }
}

impl ModelBackend for HeuristicBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn send(&self, request: &PromptRequest) -> Result<String, BackendError> {
        let statement = statement_of(&request.user_prompt)
            .ok_or_else(|| BackendError::Fatal("prompt does not follow the template".into()))?;
        Ok(self.reply_for_statement(statement))
    }
}
