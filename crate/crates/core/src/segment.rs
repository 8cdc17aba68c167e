//! Sentence-first chunking under a character budget.

use alloc::vec::Vec;

use crate::text::sentence_spans;

/// One chunk of a segmented text, as byte offsets into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub ordinal: usize,
    pub start: usize,
    pub end: usize,
    /// Characters at the front of this segment repeated from the previous one.
    pub overlap_chars: usize,
}

impl Segment {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

/// Splits `text` into segments of whole sentences.
///
/// Sentences are packed while the segment stays within `target_chars`
/// characters; a segment always receives at least one new sentence, so a
/// segment exceeds the budget by at most one sentence. Each segment after the
/// first repeats the last `overlap_chars` characters of its predecessor,
/// clipped to the predecessor's final sentence.
///
/// Callers must ensure `target_chars > overlap_chars`.
pub fn segment_text(text: &str, target_chars: usize, overlap_chars: usize) -> Vec<Segment> {
    debug_assert!(target_chars > overlap_chars);
    let sentences: Vec<(usize, usize, usize)> = sentence_spans(text)
        .into_iter()
        .map(|(s, e)| (s, e, text[s..e].chars().count()))
        .collect();
    let mut segments = Vec::new();
    let mut next = 0;
    while next < sentences.len() {
        let (start, overlap) = if next == 0 {
            (sentences[0].0, 0)
        } else {
            let (ps, pe, plen) = sentences[next - 1];
            let ov = overlap_chars.min(plen);
            (char_offset_from_end(&text[ps..pe], ov) + ps, ov)
        };
        let mut len = overlap;
        let mut end = start;
        let mut taken = 0;
        while next < sentences.len() {
            let (_, e, slen) = sentences[next];
            if taken > 0 && len + slen > target_chars {
                break;
            }
            len += slen;
            end = e;
            taken += 1;
            next += 1;
        }
        segments.push(Segment { ordinal: segments.len(), start, end, overlap_chars: overlap });
    }
    segments
}

/// Byte offset in `s` at which the last `n` characters begin.
fn char_offset_from_end(s: &str, n: usize) -> usize {
    if n == 0 {
        return s.len();
    }
    s.char_indices().rev().nth(n - 1).map(|(i, _)| i).unwrap_or(0)
}

/// Rebuilds the source from segments ordered by ordinal by dropping each
/// segment's overlap prefix.
pub fn reassemble<'a>(parts: impl IntoIterator<Item = (&'a str, usize)>) -> alloc::string::String {
    let mut out = alloc::string::String::new();
    for (text, overlap) in parts {
        let skip = text.char_indices().nth(overlap).map(|(i, _)| i).unwrap_or(text.len());
        out.push_str(&text[skip..]);
    }
    out
}
