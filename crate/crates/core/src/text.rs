//! Text normalization shared by ingestion, dictionary construction and
//! matching.
//!
//! Lowercasing is a char-for-char mapping, so a lowercased string has the
//! same number of characters as its source and token boundaries are
//! preserved. Characters whose lowercase form expands to several code points
//! are left unchanged.

use unicode_general_category::get_general_category;
use unicode_normalization::UnicodeNormalization;

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

pub fn lower_char(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

pub fn lowercase(s: &str) -> String {
    s.chars().map(lower_char).collect()
}

/// Unicode general categories P* and S*.
pub fn is_punct_or_symbol(c: char) -> bool {
    matches!(
        get_general_category(c).abbreviation().as_bytes().first(),
        Some(b'P') | Some(b'S')
    )
}

/// Replaces punctuation and symbols by spaces, collapses whitespace runs and
/// trims.
pub fn strip_punctuation(s: &str) -> String {
    let replaced: String = s
        .chars()
        .map(|c| if is_punct_or_symbol(c) { ' ' } else { c })
        .collect();
    replaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when `text[start..end]` is delimited by string ends or
/// non-alphanumeric characters on both sides.
pub fn at_token_boundary(text: &str, start: usize, end: usize) -> bool {
    let left = text[..start].chars().next_back();
    let right = text[end..].chars().next();
    left.is_none_or(|c| !c.is_alphanumeric()) && right.is_none_or(|c| !c.is_alphanumeric())
}

/// Every boundary-delimited occurrence test, by exhaustive scan. Used as the
/// reference semantics for the automaton.
pub fn contains_bounded(text: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    text.char_indices().any(|(i, _)| {
        text[i..].starts_with(needle) && at_token_boundary(text, i, i + needle.len())
    })
}

/// Lowercased maximal alphanumeric runs.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(lowercase)
}
