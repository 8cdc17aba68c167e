//! Authors, source documents and chunks; corpus loading and segmentation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use scimem_core::segment::segment_text;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub external_ids: BTreeMap<String, String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub author_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub full_text: Option<String>,
    pub timestamp: NaiveDate,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// `(concept_id, relevance in [0, 1])`
    #[serde(default)]
    pub concept_tags: Vec<(String, f64)>,
    #[serde(default)]
    pub cited_work_ids: Vec<String>,
    #[serde(default)]
    pub cited_by_count: u64,
}

impl SourceDocument {
    /// Text that gets chunked: the full text when present, otherwise
    /// `"title. abstract"`.
    pub fn chunkable_text(&self) -> Option<String> {
        if let Some(full) = self.full_text.as_deref().filter(|t| !t.trim().is_empty()) {
            return Some(full.to_string());
        }
        let title = self.title.trim();
        let abs = self.abstract_text.trim();
        match (title.is_empty(), abs.is_empty()) {
            (true, true) => None,
            (false, true) => Some(title.to_string()),
            (true, false) => Some(abs.to_string()),
            (false, false) if title.ends_with(['.', '?', '!']) => Some(format!("{title} {abs}")),
            (false, false) => Some(format!("{title}. {abs}")),
        }
    }

    pub fn year(&self) -> i32 {
        chrono::Datelike::year(&self.timestamp)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub source_document: String,
    pub timestamp: NaiveDate,
    pub ordinal: usize,
    pub text: String,
    /// Leading characters repeated from the previous chunk of the same document.
    #[serde(default)]
    pub overlap_chars: usize,
}

impl Chunk {
    pub fn make_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal}")
    }
}

/// Splits a document into sentence-aligned chunks of roughly `target_chars`.
pub fn segment_document(doc: &SourceDocument, target_chars: usize, overlap_chars: usize) -> Result<Vec<Chunk>> {
    if target_chars == 0 || target_chars <= overlap_chars {
        return Err(Error::InvalidRequest(format!(
            "target_chars ({target_chars}) must exceed overlap_chars ({overlap_chars})"
        )));
    }
    let text = doc.chunkable_text().ok_or_else(|| Error::EmptyDocument(doc.doc_id.clone()))?;
    Ok(segment_text(&text, target_chars, overlap_chars)
        .into_iter()
        .map(|s| Chunk {
            chunk_id: Chunk::make_id(&doc.doc_id, s.ordinal),
            source_document: doc.doc_id.clone(),
            timestamp: doc.timestamp,
            ordinal: s.ordinal,
            text: s.text(&text).to_string(),
            overlap_chars: s.overlap_chars,
        })
        .collect())
}

/// Reconstructs a document's chunkable text from its chunks.
pub fn reassemble_chunks(chunks: &[Chunk]) -> String {
    let mut sorted: Vec<&Chunk> = chunks.iter().collect();
    sorted.sort_by_key(|c| c.ordinal);
    scimem_core::segment::reassemble(sorted.iter().map(|c| (c.text.as_str(), c.overlap_chars)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub authors: Vec<AuthorRecord>,
    pub documents: Vec<SourceDocument>,
    #[serde(default)]
    pub cutoff: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Documents removed because they postdate the cutoff.
    pub dropped_count: usize,
}

impl Corpus {
    pub fn author(&self, author_id: &str) -> Option<&AuthorRecord> {
        self.authors.iter().find(|a| a.author_id == author_id)
    }

    pub fn document(&self, doc_id: &str) -> Option<&SourceDocument> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// The author's documents in chronological order, ties broken by doc id.
    pub fn documents_of(&self, author_id: &str) -> Vec<&SourceDocument> {
        let mut docs: Vec<&SourceDocument> = self.documents.iter().filter(|d| d.author_id == author_id).collect();
        docs.sort_by(|a, b| (a.timestamp, &a.doc_id).cmp(&(b.timestamp, &b.doc_id)));
        docs
    }

    /// Checks the invariants and applies the cutoff.
    pub fn validated(mut self) -> Result<LoadedCorpus> {
        let mut author_ids = BTreeSet::new();
        for a in &self.authors {
            if a.author_id.is_empty() {
                return Err(Error::Parse("author with empty author_id".into()));
            }
            if !author_ids.insert(a.author_id.as_str()) {
                return Err(Error::Parse(format!("duplicate author_id {}", a.author_id)));
            }
        }
        let mut doc_ids = BTreeSet::new();
        for d in &self.documents {
            if d.doc_id.is_empty() {
                return Err(Error::Parse("document with empty doc_id".into()));
            }
            if !doc_ids.insert(d.doc_id.as_str()) {
                return Err(Error::Parse(format!("duplicate doc_id {}", d.doc_id)));
            }
            if !author_ids.contains(d.author_id.as_str()) {
                return Err(Error::Referential(format!(
                    "document {} cites unknown author {}",
                    d.doc_id, d.author_id
                )));
            }
            if let Some((c, s)) = d.concept_tags.iter().find(|(_, s)| !(0.0..=1.0).contains(s)) {
                return Err(Error::Parse(format!("document {}: tag {c} has relevance {s} outside [0, 1]", d.doc_id)));
            }
        }
        let before = self.documents.len();
        if let Some(cutoff) = self.cutoff {
            self.documents.retain(|d| d.timestamp <= cutoff);
        }
        let dropped_count = before - self.documents.len();
        Ok(LoadedCorpus { corpus: self, dropped_count })
    }

    pub fn parse(raw: &str) -> Result<LoadedCorpus> {
        let corpus: Corpus = serde_json::from_str(raw).map_err(|e| Error::Parse(format!("corpus: {e}")))?;
        corpus.validated()
    }

    /// A copy keeping only the documents dated on or before `date`.
    pub fn truncated_at(&self, date: NaiveDate) -> Corpus {
        Corpus {
            authors: self.authors.clone(),
            documents: self.documents.iter().filter(|d| d.timestamp <= date).cloned().collect(),
            cutoff: Some(self.cutoff.map_or(date, |c| c.min(date))),
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::parse(&raw).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, date: &str) -> SourceDocument {
        SourceDocument {
            doc_id: id.into(),
            author_id: "a1".into(),
            title: "Urban heat".into(),
            abstract_text: "Cities warm faster than their surroundings.".into(),
            full_text: None,
            timestamp: date.parse().unwrap(),
            venue: None,
            keywords: vec![],
            concept_tags: vec![],
            cited_work_ids: vec![],
            cited_by_count: 0,
        }
    }

    #[test]
    fn short_doc_single_chunk() {
        let d = doc("d1", "2020-01-01");
        let chunks = segment_document(&d, 1200, 120).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, "Urban heat. Cities warm faster than their surroundings.");
        assert_eq!(chunks[0].chunk_id, "d1#0");
    }

    #[test]
    fn ten_sentences_three_chunks() {
        let mut d = doc("d1", "2020-01-01");
        let sentences: Vec<String> =
            (0..10).map(|i| format!("{}{}. ", (b'A' + i as u8) as char, "x".repeat(97))).collect();
        let text: String = sentences.concat();
        d.full_text = Some(text.clone());
        let chunks = segment_document(&d, 450, 0).unwrap();
        assert_eq!(chunks.iter().map(|c| c.ordinal).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(chunks.iter().map(|c| c.text.as_str()).collect::<String>(), text);
    }

    #[test]
    fn overlap_strips_back_to_source() {
        let mut d = doc("d1", "2020-01-01");
        let text: String = (0..30).map(|i| format!("Sentence number {i} talks about heat. ")).collect();
        d.full_text = Some(text.clone());
        let chunks = segment_document(&d, 200, 40).unwrap();
        assert!(chunks.len() > 3);
        assert!(chunks[1..].iter().all(|c| c.overlap_chars > 0));
        assert_eq!(reassemble_chunks(&chunks), text);
    }

    #[test]
    fn empty_document_rejected() {
        let mut d = doc("d1", "2020-01-01");
        d.title.clear();
        d.abstract_text.clear();
        assert!(matches!(segment_document(&d, 100, 10), Err(Error::EmptyDocument(_))));
    }

    #[test]
    fn cutoff_drops_later_documents() {
        let raw = r#"{"authors":[{"author_id":"a1","display_name":"A"}],
            "documents":[{"doc_id":"d1","author_id":"a1","title":"t","timestamp":"2020-01-01"},
                         {"doc_id":"d2","author_id":"a1","title":"t","timestamp":"2021-06-01"}],
            "cutoff":"2021-01-01"}"#;
        let loaded = Corpus::parse(raw).unwrap();
        assert_eq!(loaded.dropped_count, 1);
        assert_eq!(loaded.corpus.documents.len(), 1);
        assert_eq!(loaded.corpus.authors.len(), 1);
    }

    #[test]
    fn empty_corpus_loads() {
        let loaded = Corpus::parse(r#"{"authors":[],"documents":[]}"#).unwrap();
        assert_eq!(loaded.corpus, Corpus::default());
    }

    #[test]
    fn unknown_author_is_referential() {
        let raw = r#"{"authors":[],"documents":[{"doc_id":"d1","author_id":"ghost","title":"t","timestamp":"2020-01-01"}]}"#;
        assert!(matches!(Corpus::parse(raw), Err(Error::Referential(_))));
    }

    #[test]
    fn missing_timestamp_is_parse_error() {
        let raw = r#"{"authors":[{"author_id":"a1"}],"documents":[{"doc_id":"d1","author_id":"a1","title":"t"}]}"#;
        assert!(matches!(Corpus::parse(raw), Err(Error::Parse(_))));
    }
}
