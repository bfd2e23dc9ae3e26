//! Advisory check that each reply sentence stays under the word limit.

use serde::{Deserialize, Serialize};

/// Sentences with this many words or more are flagged.
pub const MAX_SENTENCE_WORDS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StyleViolation {
    pub sentence_index: usize,
    pub word_count: usize,
    pub sentence: String,
}

/// Split at `.`, `!` and `?`. A period with digits on both sides ("3.5") is
/// not a terminator. Abbreviations get no special treatment. Empty
/// sentences are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let terminator = match c {
            '!' | '?' => true,
            '.' => {
                let digit_before = i > 0 && chars[i - 1].1.is_ascii_digit();
                let digit_after = chars.get(i + 1).is_some_and(|(_, n)| n.is_ascii_digit());
                !(digit_before && digit_after)
            }
            _ => false,
        };
        let run_continues = chars.get(i + 1).is_some_and(|(_, n)| matches!(n, '.' | '!' | '?'));
        if terminator && !run_continues {
            let end = pos + c.len_utf8();
            out.push(&text[start..end]);
            start = end;
        }
    }
    out.push(&text[start..]);
    out.into_iter()
        .map(str::trim)
        .filter(|s| word_count(s) > 0)
        .collect()
}

/// Whitespace-separated tokens containing at least one alphanumeric char.
pub fn word_count(sentence: &str) -> usize {
    sentence
        .split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

pub fn check_response_style(text: &str) -> Vec<StyleViolation> {
    sentences(text)
        .into_iter()
        .enumerate()
        .filter_map(|(sentence_index, s)| {
            let word_count = word_count(s);
            (word_count >= MAX_SENTENCE_WORDS).then(|| StyleViolation {
                sentence_index,
                word_count,
                sentence: s.to_string(),
            })
        })
        .collect()
}
