//! Tokenization, label normalization and sentence splitting.

use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases `text`, splits on every non-alphanumeric character and keeps
/// tokens of at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(String::from)
        .collect()
}

/// Trim, lowercase and collapse internal whitespace to single spaces.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for word in label.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

/// Byte spans `[start, end)` of the sentences of `text`.
///
/// A sentence ends after `.`, `!` or `?` followed by whitespace, or after a
/// newline. The trailing whitespace run belongs to the sentence it follows, so
/// the spans tile the input exactly.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let next_is_space = chars.peek().map(|&(_, n)| n.is_whitespace()).unwrap_or(false);
        let boundary = c == '\n' || (matches!(c, '.' | '!' | '?') && next_is_space);
        if boundary {
            let mut end = i + c.len_utf8();
            while let Some(&(j, n)) = chars.peek() {
                if !n.is_whitespace() {
                    break;
                }
                end = j + n.len_utf8();
                chars.next();
            }
            spans.push((start, end));
            start = end;
        }
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

/// Trimmed, non-empty sentences of `text`.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].trim())
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn tokenize_drops_short_tokens_and_lowercases() {
        assert_eq!(tokenize("Urban heat, a BM25-RRF x"), vec!["urban", "heat", "bm25", "rrf"]);
        assert!(tokenize("a b c !").is_empty());
    }

    #[test]
    fn sentences_tile_the_text() {
        let t = "One. Two!  Three?\nFour";
        let spans = sentence_spans(t);
        assert_eq!(spans.len(), 4);
        let joined: String = spans.iter().map(|&(s, e)| &t[s..e]).collect();
        assert_eq!(joined, t);
        assert_eq!(split_sentences(t), vec!["One.", "Two!", "Three?", "Four"]);
    }

    #[test]
    fn decimal_points_do_not_split() {
        assert_eq!(split_sentences("Version 1.5 is out. Next."), vec!["Version 1.5 is out.", "Next."]);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_label(&s);
            prop_assert_eq!(normalize_label(&once), once);
        }

        #[test]
        fn spans_cover_input(s in "[a-z .!?\n]{0,80}") {
            let joined: String = sentence_spans(&s).iter().map(|&(a, b)| &s[a..b]).collect();
            prop_assert_eq!(joined, s);
        }
    }
}
