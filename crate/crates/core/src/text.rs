//! Tokenization shared by the corpus word counts and the lexicon metrics.
//!
//! A token is a maximal run of alphabetic characters, upper-cased. Every
//! other character separates tokens, so `"can't"` yields `CAN` and `T`.

use alloc::string::String;
use alloc::vec::Vec;

/// Iterator over the raw (not yet upper-cased) alphabetic runs of `text`.
pub fn alpha_runs(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphabetic()).filter(|s| !s.is_empty())
}

/// Upper-cased tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    alpha_runs(text).map(upper).collect()
}

/// Number of tokens in `text`.
pub fn word_count(text: &str) -> usize {
    alpha_runs(text).count()
}

pub(crate) fn upper(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        out.extend(c.to_uppercase());
    }
    out
}

/// Collapses every whitespace run to one space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for piece in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(piece);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn splits_on_every_non_letter() {
        assert_eq!(tokenize("How much?"), vec!["HOW", "MUCH"]);
        assert_eq!(tokenize("can't-stop 3rd"), vec!["CAN", "T", "STOP", "RD"]);
        assert_eq!(word_count("Ten dollars."), 2);
        assert_eq!(word_count("  ... 42 "), 0);
    }

    #[test]
    fn whitespace_is_collapsed() {
        assert_eq!(normalize_whitespace("  a \n\t b  "), "a b");
        assert_eq!(normalize_whitespace(" \n "), "");
    }
}
