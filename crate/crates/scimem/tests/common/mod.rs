// Synthetic corpora and snapshots shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scimem::corpus::{AuthorRecord, Corpus, SourceDocument};
use scimem::domain::{ConceptRecord, Snapshot, SnapshotAuthor, SnapshotWork};

pub const VOCAB: &[&str] = &[
    "urban heat", "albedo", "street trees", "remote sensing", "green roofs", "thermal comfort", "spin torque",
    "thin films", "magnetic anisotropy", "hyperfine field", "oxidation state", "catalysis", "electrolysis",
    "hydrogen", "carbon tax", "auctions", "game theory", "graph neural network", "dense retrieval", "bm25",
    "query expansion", "link prediction", "protein folding", "gene expression", "stochastic process",
    "optimization", "market design", "demand response", "skyrmions", "strain", "vegetation index",
    "cooling demand", "knowledge graphs", "shortest paths", "message passing", "embeddings",
];

pub const VENUES: &[&str] = &["Venue A", "Venue B", "Venue C", "Venue D", "Venue E"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn author(id: &str) -> AuthorRecord {
    AuthorRecord {
        author_id: id.into(),
        display_name: format!("Researcher {id}"),
        external_ids: BTreeMap::new(),
        metadata: BTreeMap::new(),
    }
}

pub fn doc(id: &str, author_id: &str, when: NaiveDate, title: &str, abstract_text: &str) -> SourceDocument {
    SourceDocument {
        doc_id: id.into(),
        author_id: author_id.into(),
        title: title.into(),
        abstract_text: abstract_text.into(),
        full_text: None,
        timestamp: when,
        venue: None,
        keywords: Vec::new(),
        concept_tags: Vec::new(),
        cited_work_ids: Vec::new(),
        cited_by_count: 0,
    }
}

/// `n_authors` authors with `docs_each` documents each, one per year from
/// 2001, carrying 3 to 6 keywords, a venue, citations of earlier documents
/// and tags from `concepts`.
pub fn synthetic_corpus(n_authors: usize, docs_each: usize, concepts: &[&str], seed: u64) -> Corpus {
    let mut r = rng(seed);
    let mut authors = Vec::new();
    let mut documents: Vec<SourceDocument> = Vec::new();
    for a in 0..n_authors {
        let aid = format!("au{a:03}");
        authors.push(author(&aid));
        for i in 0..docs_each {
            let when = date(2001 + i as i32, r.gen_range(1..=12), r.gen_range(1..=28));
            let n_kw = r.gen_range(3..=6);
            let kws: Vec<String> = VOCAB.choose_multiple(&mut r, n_kw).map(|s| s.to_string()).collect();
            let title = format!("On {} and {}", kws[0], kws[1]);
            let abstract_text = format!("We study {} using {}. Results on {} are reported.", kws[0], kws[1], kws[2]);
            let mut d = doc(&format!("{aid}-d{i:02}"), &aid, when, &title, &abstract_text);
            d.venue = Some(VENUES[r.gen_range(0..VENUES.len())].to_string());
            d.keywords = kws;
            let earlier: Vec<&SourceDocument> = documents.iter().collect();
            d.cited_work_ids = earlier.choose_multiple(&mut r, 3.min(earlier.len())).map(|x| x.doc_id.clone()).collect();
            d.cited_by_count = r.gen_range(0..200);
            if !concepts.is_empty() {
                d.concept_tags =
                    concepts.choose_multiple(&mut r, 2.min(concepts.len())).map(|c| (c.to_string(), 0.8)).collect();
            }
            documents.push(d);
        }
    }
    Corpus { authors, documents, cutoff: None }
}

pub fn concept(id: &str, label: &str, level: u32, parent: Option<&str>) -> ConceptRecord {
    ConceptRecord {
        concept_id: id.into(),
        label: label.into(),
        level,
        definition: format!("Definition of {label}."),
        ancestor_ids: parent.map(|p| vec![p.to_string()]).unwrap_or_default(),
        related: Vec::new(),
        work_refs: Vec::new(),
    }
}

pub fn work(id: &str, authors: &[&str], year: i32, cites: u64, tags: &[(&str, f64)]) -> SnapshotWork {
    SnapshotWork {
        doc_id: id.into(),
        author_ids: authors.iter().map(|s| s.to_string()).collect(),
        cited_by_count: cites,
        concept_tags: tags.iter().map(|(c, s)| (c.to_string(), *s)).collect(),
        abstract_text: format!("Abstract of {id}."),
        title: format!("Title of {id}"),
        year,
        venue: None,
    }
}

pub const ROOTS: &[(&str, &str)] = &[
    ("R-MATH", "Mathematics"),
    ("R-PHYS", "Physics"),
    ("R-CHEM", "Chemistry"),
    ("R-BIO", "Biology"),
    ("R-CS", "Computer science"),
    ("R-ECON", "Economics"),
];

/// Six root disciplines, each with `subs` child concepts.
pub fn discipline_concepts(subs: usize) -> Vec<ConceptRecord> {
    let mut out = Vec::new();
    for (id, label) in ROOTS {
        out.push(concept(id, label, 0, None));
        for s in 0..subs {
            out.push(concept(&format!("{id}-{s}"), &format!("{label} topic {s}"), 1, Some(id)));
        }
    }
    out
}

pub fn snapshot(concepts: Vec<ConceptRecord>, works: Vec<SnapshotWork>) -> Snapshot {
    let mut ids: Vec<&String> = works.iter().flat_map(|w| w.author_ids.iter()).collect();
    ids.sort();
    ids.dedup();
    let authors = ids
        .into_iter()
        .map(|a| SnapshotAuthor { author_id: a.clone(), display_name: a.to_uppercase(), affiliation: None })
        .collect();
    Snapshot { concepts, works, authors }
}
