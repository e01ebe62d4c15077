//! Dictionary-based disclosure metrics: tone, uncertainty and forward-looking
//! ratios, and the Gunning fog readability index.
//!
//! Counting uses the crate tokenizer ([`crate::text`]), so list terms are
//! upper-case alphabetic words. Forward-looking terms may be multiword
//! phrases; a phrase matches a contiguous token run and counts once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{QaExchange, Role};
use crate::text::{alpha_runs, tokenize, upper};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("{list}: term `{term}` is not alphabetic")]
    InvalidTerm { list: String, term: String },
    #[error("term `{0}` appears in both the positive and the negative list")]
    Overlap(String),
    #[error("text contains no words")]
    EmptyText,
}

/// A set of single words and multiword phrases, matched greedily
/// longest-first and without overlap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermSet {
    singles: BTreeSet<String>,
    /// First token -> phrases starting with it, longest first.
    phrases: BTreeMap<String, Vec<Vec<String>>>,
}

impl TermSet {
    pub fn from_terms<'a, I>(list: &str, terms: I) -> Result<TermSet, LexiconError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut set = TermSet::default();
        for raw in terms {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let words: Vec<&str> = raw.split_whitespace().collect();
            if words.iter().any(|w| !w.chars().all(char::is_alphabetic)) {
                return Err(LexiconError::InvalidTerm {
                    list: list.to_string(),
                    term: raw.to_string(),
                });
            }
            let words: Vec<String> = words.into_iter().map(upper).collect();
            set.insert(words);
        }
        Ok(set)
    }

    /// Parses a word-list file: one term per line, `#` starts a comment.
    pub fn parse(list: &str, contents: &str) -> Result<TermSet, LexiconError> {
        TermSet::from_terms(
            list,
            contents.lines().map(|l| l.split('#').next().unwrap_or("")),
        )
    }

    fn insert(&mut self, words: Vec<String>) {
        if words.len() == 1 {
            self.singles.extend(words);
        } else {
            let bucket = self.phrases.entry(words[0].clone()).or_default();
            if !bucket.contains(&words) {
                bucket.push(words);
                bucket.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.singles.len() + self.phrases.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_word(&self, upper_word: &str) -> bool {
        self.singles.contains(upper_word)
    }

    pub fn singles(&self) -> impl Iterator<Item = &str> {
        self.singles.iter().map(String::as_str)
    }

    /// Number of term occurrences in a token stream.
    pub fn count_matches(&self, tokens: &[String]) -> usize {
        let mut i = 0;
        let mut hits = 0;
        while i < tokens.len() {
            let phrase_len = self.phrases.get(&tokens[i]).and_then(|cands| {
                cands
                    .iter()
                    .find(|p| tokens.len() - i >= p.len() && tokens[i..i + p.len()] == p[..])
                    .map(Vec::len)
            });
            if let Some(n) = phrase_len {
                hits += 1;
                i += n;
            } else {
                if self.singles.contains(&tokens[i]) {
                    hits += 1;
                }
                i += 1;
            }
        }
        hits
    }
}

/// The four dictionaries; immutable after loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordLists {
    pub positive: TermSet,
    pub negative: TermSet,
    pub uncertainty: TermSet,
    pub forward_looking: TermSet,
}

impl WordLists {
    pub fn new(
        positive: TermSet,
        negative: TermSet,
        uncertainty: TermSet,
        forward_looking: TermSet,
    ) -> Result<WordLists, LexiconError> {
        if let Some(w) = positive.singles().find(|w| negative.contains_word(w)) {
            return Err(LexiconError::Overlap(w.to_string()));
        }
        if let Some(p) = positive.phrases.values().flatten().find(|p| {
            negative
                .phrases
                .get(&p[0])
                .is_some_and(|cands| cands.contains(p))
        }) {
            return Err(LexiconError::Overlap(p.join(" ")));
        }
        Ok(WordLists {
            positive,
            negative,
            uncertainty,
            forward_looking,
        })
    }

    /// Builds the lists from the contents of the four word-list files.
    pub fn parse(positive: &str, negative: &str, uncertainty: &str, forward: &str) -> Result<WordLists, LexiconError> {
        WordLists::new(
            TermSet::parse("positive", positive)?,
            TermSet::parse("negative", negative)?,
            TermSet::parse("uncertainty", uncertainty)?,
            TermSet::parse("forward", forward)?,
        )
    }
}

fn tone_of_tokens(tokens: &[String], lists: &WordLists) -> f64 {
    let p = lists.positive.count_matches(tokens) as f64;
    let n = lists.negative.count_matches(tokens) as f64;
    if p + n == 0.0 {
        0.0
    } else {
        (p - n) / (p + n)
    }
}

/// `(P - N) / (P + N)`, or 0 when the text has no sentiment words.
pub fn tone(text: &str, lists: &WordLists) -> f64 {
    tone_of_tokens(&tokenize(text), lists)
}

/// Matched-term occurrences over total words.
pub fn lexical_ratio(text: &str, terms: &TermSet) -> Result<f64, LexiconError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(LexiconError::EmptyText);
    }
    Ok(terms.count_matches(&tokens) as f64 / tokens.len() as f64)
}

/// Syllable-count threshold for a "complex" word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FogOptions {
    /// A word is complex when it has at least this many syllables. The
    /// conventional Gunning rule is 3; use 4 for the strict "more than three"
    /// reading.
    pub complex_min_syllables: usize,
}

impl Default for FogOptions {
    fn default() -> Self {
        FogOptions {
            complex_min_syllables: 3,
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate: each maximal run of `aeiouy` is one
/// syllable, a final consonant-preceded `e` is silent, minimum one.
pub fn syllable_count(word: &str) -> usize {
    let lower: Vec<char> = word.chars().flat_map(char::to_lowercase).collect();
    let mut groups = 0;
    let mut in_group = false;
    for &c in &lower {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = lower.len();
    if groups > 1 && n >= 2 && lower[n - 1] == 'e' && !is_vowel(lower[n - 2]) {
        groups -= 1;
    }
    groups.max(1)
}

/// Number of sentences: text segments delimited by `.`, `!` or `?` that
/// contain at least one letter. A period between two digits is not a
/// terminator.
pub fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut has_letter = false;
    for (i, &c) in chars.iter().enumerate() {
        let decimal_point = c == '.'
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(char::is_ascii_digit);
        if matches!(c, '.' | '!' | '?') && !decimal_point {
            if has_letter {
                count += 1;
            }
            has_letter = false;
        } else if c.is_alphabetic() {
            has_letter = true;
        }
    }
    if has_letter {
        count += 1;
    }
    count
}

/// Word, sentence and complex-word tallies behind the fog index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FogCounts {
    pub words: usize,
    pub sentences: usize,
    pub complex_words: usize,
}

pub fn fog_counts(text: &str, opts: FogOptions) -> FogCounts {
    let mut words = 0;
    let mut complex = 0;
    for chunk in text.split_whitespace() {
        let parts: Vec<&str> = alpha_runs(chunk).collect();
        let compound = parts.len() > 1 && chunk.contains('-');
        words += parts.len();
        if !compound {
            complex += parts
                .iter()
                .filter(|p| syllable_count(p) >= opts.complex_min_syllables)
                .count();
        }
    }
    FogCounts {
        words,
        sentences: sentence_count(text),
        complex_words: complex,
    }
}

/// `0.4 * words/sentences + 100 * complex/words`.
pub fn fog_index(text: &str, opts: FogOptions) -> Result<f64, LexiconError> {
    let c = fog_counts(text, opts);
    if c.words == 0 || c.sentences == 0 {
        return Err(LexiconError::EmptyText);
    }
    Ok(0.4 * (c.words as f64 / c.sentences as f64) + 100.0 * (c.complex_words as f64 / c.words as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextMetrics {
    pub tone: f64,
    pub uncert: f64,
    pub forward: f64,
    pub fog: f64,
    pub word_count: usize,
}

/// All four metrics for a block of text. A text without words scores 0
/// everywhere.
pub fn text_metrics(text: &str, lists: &WordLists, opts: FogOptions) -> TextMetrics {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return TextMetrics {
            tone: 0.0,
            uncert: 0.0,
            forward: 0.0,
            fog: 0.0,
            word_count: 0,
        };
    }
    let n = tokens.len() as f64;
    TextMetrics {
        tone: tone_of_tokens(&tokens, lists),
        uncert: lists.uncertainty.count_matches(&tokens) as f64 / n,
        forward: lists.forward_looking.count_matches(&tokens) as f64 / n,
        fog: fog_index(text, opts).unwrap_or(0.0),
        word_count: tokens.len(),
    }
}

/// Which turns of an exchange enter the exchange-level metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TurnScope {
    #[default]
    AnalystOnly,
    AllTurns,
}

/// Metrics over the selected turns of one exchange, joined by spaces.
pub fn exchange_metrics(x: &QaExchange, lists: &WordLists, scope: TurnScope, opts: FogOptions) -> TextMetrics {
    let text = x
        .turns
        .iter()
        .filter(|t| scope == TurnScope::AllTurns || t.role == Role::Analyst)
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    text_metrics(&text, lists, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;
    use alloc::vec;

    fn lists() -> WordLists {
        WordLists::parse(
            "# positive\ngood\ngreat\nstrong\nimprove\n",
            "bad\nweak\nloss\ndecline\n",
            "may\nuncertain\napproximately\n",
            "expect\nwe expect\nwill\nnext year\n",
        )
        .unwrap()
    }

    #[test]
    fn tone_examples() {
        let l = lists();
        assert_eq!(tone("good great strong but bad", &l), 0.5);
        assert_eq!(tone("nothing to see here", &l), 0.0);
        assert_eq!(tone("GOOD, good... Bad!", &l), 1.0 / 3.0);
    }

    #[test]
    fn overlap_rejected() {
        let err = WordLists::parse("good\n", "GOOD\n", "", "").unwrap_err();
        assert_eq!(err, LexiconError::Overlap("GOOD".into()));
    }

    #[test]
    fn non_alpha_terms_rejected() {
        assert!(matches!(
            TermSet::parse("uncertainty", "may\nq3-ish\n"),
            Err(LexiconError::InvalidTerm { .. })
        ));
    }

    #[test]
    fn ratio_examples() {
        let l = lists();
        let mut words = vec!["filler"; 92];
        words.extend(["may"; 8]);
        assert_eq!(lexical_ratio(&words.join(" "), &l.uncertainty).unwrap(), 0.08);
        assert_eq!(lexical_ratio("Uncertain.", &l.uncertainty).unwrap(), 1.0);
        assert_eq!(lexical_ratio("  123 ", &l.uncertainty), Err(LexiconError::EmptyText));
    }

    #[test]
    fn phrase_counts_once_per_occurrence() {
        let l = lists();
        // "we expect" twice in 50 words; EXPECT alone must not double count.
        let mut words = vec!["we", "expect"];
        words.extend(vec!["filler"; 23]);
        words.extend(["we", "expect"]);
        words.extend(vec!["filler"; 23]);
        assert_eq!(words.len(), 50);
        assert_eq!(lexical_ratio(&words.join(" "), &l.forward_looking).unwrap(), 0.04);
    }

    #[test]
    fn syllables() {
        assert_eq!(syllable_count("cat"), 1);
        assert_eq!(syllable_count("the"), 1);
        assert_eq!(syllable_count("make"), 1);
        assert_eq!(syllable_count("agree"), 2);
        assert_eq!(syllable_count("beautiful"), 3);
        assert_eq!(syllable_count("information"), 4);
        assert_eq!(syllable_count("rhythm"), 1);
        assert_eq!(syllable_count("Revenue"), 3);
    }

    #[test]
    fn fog_examples() {
        let o = FogOptions::default();
        assert!((fog_index("The cat sat. The dog ran.", o).unwrap() - 1.2).abs() < 1e-12);
        assert!((fog_index("Go.", o).unwrap() - 0.4).abs() < 1e-12);
        // 10 words, 2 complex (3+ syllables), one sentence.
        let s = "The firm saw beautiful sales and an excellent cash flow.";
        assert_eq!(
            fog_counts(s, o),
            FogCounts {
                words: 10,
                sentences: 1,
                complex_words: 2
            }
        );
        assert!((fog_index(s, o).unwrap() - 24.0).abs() < 1e-12);
        assert_eq!(fog_index("...", o), Err(LexiconError::EmptyText));
    }

    #[test]
    fn fog_threshold_and_compounds() {
        let strict = FogOptions {
            complex_min_syllables: 4,
        };
        // "beautiful" has 3 syllables: complex by default, not under the strict rule.
        assert_eq!(fog_counts("Beautiful.", FogOptions::default()).complex_words, 1);
        assert_eq!(fog_counts("Beautiful.", strict).complex_words, 0);
        // Hyphenated compounds never count as complex.
        let c = fog_counts("A beautiful-information day.", FogOptions::default());
        assert_eq!(c.words, 4);
        assert_eq!(c.complex_words, 0);
    }

    #[test]
    fn decimal_points_do_not_end_sentences() {
        assert_eq!(sentence_count("Revenue was 3.5 million. Up again!"), 2);
        assert_eq!(sentence_count("No terminator here"), 1);
        assert_eq!(sentence_count("Wait... what?!"), 2);
    }

    #[test]
    fn exchange_metrics_use_analyst_turns() {
        let l = lists();
        let x = QaExchange {
            conver_id: "T-1".into(),
            order: 1,
            turns: vec![
                Turn::new(Role::Analyst, None, "Good and great quarter?").unwrap(),
                Turn::new(Role::Manager, None, "Bad weak loss decline bad.").unwrap(),
            ],
        };
        let m = exchange_metrics(&x, &l, TurnScope::AnalystOnly, FogOptions::default());
        assert_eq!(m.tone, 1.0);
        assert_eq!(m.word_count, 4);
        let all = exchange_metrics(&x, &l, TurnScope::AllTurns, FogOptions::default());
        assert_eq!(all.tone, (2.0 - 5.0) / 7.0);

        let silent = QaExchange {
            conver_id: "T-2".into(),
            order: 2,
            turns: vec![
                Turn::new(Role::Analyst, None, "Any update on capex?").unwrap(),
                Turn::new(Role::Manager, None, "Good.").unwrap(),
            ],
        };
        assert_eq!(exchange_metrics(&silent, &l, TurnScope::AnalystOnly, FogOptions::default()).tone, 0.0);
    }

    #[test]
    fn exchange_equal_to_presentation_has_same_metrics() {
        let l = lists();
        let text = "We expect strong growth. Results may improve next year, though weak demand remains uncertain.";
        let x = QaExchange {
            conver_id: "T-1".into(),
            order: 1,
            turns: vec![
                Turn::new(Role::Analyst, None, text).unwrap(),
                Turn::new(Role::Manager, None, "Thanks.").unwrap(),
            ],
        };
        assert_eq!(
            exchange_metrics(&x, &l, TurnScope::AnalystOnly, FogOptions::default()),
            text_metrics(text, &l, FogOptions::default())
        );
    }
}
