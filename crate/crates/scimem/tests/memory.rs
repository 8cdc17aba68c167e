mod common;

use common::{author, date, doc, synthetic_corpus};
use scimem::author::{answer, build_memory, AuthorMemory, EPISODIC_SECTION, PERSONA_SECTION, QUESTION_SECTION, SEMANTIC_SECTION};
use scimem::config::Config;
use scimem::corpus::{Corpus, SourceDocument};
use scimem::episodic::{retrieve, sparse_search};
use scimem::error::Error;
use scimem::providers::{MockProvider, Providers};
use chrono::Datelike;
use scimem_core::PeriodLevel;

fn mock() -> Providers {
    Providers::from_mock(MockProvider::new(64, 7))
}

fn one_author(docs: Vec<SourceDocument>) -> Corpus {
    Corpus { authors: vec![author("ada")], documents: docs, cutoff: None }.validated().unwrap().corpus
}

fn forty_docs() -> Corpus {
    let docs = (0..40)
        .map(|i| {
            let y = 2015 + i / 4;
            let m = 1 + 3 * (i % 4) as u32;
            doc(&format!("p{i:02}"), "ada", date(y, m, 10), &format!("Study {i} of heat islands"), "We measure surface temperature.")
        })
        .collect();
    one_author(docs)
}

#[test]
fn ten_years_give_ten_yearly_summaries() {
    let c = forty_docs();
    let m = build_memory(&c, "ada", &mock(), &Config::default()).unwrap();
    let l1: Vec<i32> = m.semantic.at_level(PeriodLevel::L1).map(|s| s.key.span_start.year()).collect();
    assert_eq!(l1, (2015..=2024).collect::<Vec<_>>());
    assert_eq!(m.semantic.at_level(PeriodLevel::L3).count(), 1);
    m.semantic.check_consistency().unwrap();
    assert_eq!(m.episodic.len(), 40);
}

#[test]
fn build_is_deterministic_and_roundtrips() {
    let c = forty_docs();
    let cfg = Config::default();
    let a = build_memory(&c, "ada", &mock(), &cfg).unwrap();
    let b = build_memory(&c, "ada", &mock(), &cfg).unwrap();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    let back = AuthorMemory::load(dir.path(), "ada").unwrap();
    assert_eq!(a, back);
    let all = AuthorMemory::load_all(dir.path()).unwrap();
    assert_eq!(all.keys().collect::<Vec<_>>(), ["ada"]);

    let q = "How did your view of surface temperature change?";
    let x = answer(&a, q, &mock(), &cfg).unwrap();
    let y = answer(&back, q, &mock(), &cfg).unwrap();
    assert_eq!(x, y);
}

#[test]
fn unknown_and_empty_authors() {
    let c = forty_docs();
    assert!(matches!(build_memory(&c, "nobody", &mock(), &Config::default()), Err(Error::UnknownAuthor(_))));
    let dir = tempfile::tempdir().unwrap();
    assert!(AuthorMemory::load(dir.path(), "ada").is_err());
}

#[test]
fn cutoff_hides_later_documents() {
    let c = forty_docs();
    let early = c.truncated_at(date(2019, 12, 31)).validated().unwrap().corpus;
    let m = build_memory(&early, "ada", &mock(), &Config::default()).unwrap();
    assert_eq!(m.episodic.len(), 20);
    assert!(m.latest_date().unwrap() <= date(2019, 12, 31), "{:?}", m.latest_date());
    assert!(m.semantic.summaries.keys().all(|k| k.span_start.year() <= 2019));
}

#[test]
fn prompt_sections_in_order() {
    let c = forty_docs();
    let cfg = Config::default();
    let m = build_memory(&c, "ada", &mock(), &cfg).unwrap();
    let a = answer(&m, "What drives surface temperature?", &mock(), &cfg).unwrap();
    let text = a.prompt.unwrap().render();
    let pos: Vec<usize> =
        [PERSONA_SECTION, SEMANTIC_SECTION, EPISODIC_SECTION, QUESTION_SECTION].iter().map(|s| text.find(s).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
    assert!(!a.cited_chunk_ids.is_empty());
    assert!(a.cited_chunk_ids.len() <= cfg.agent.evidence_chunks);
}

#[test]
fn scoped_context_steers_retrieval() {
    // Two chunks scoring equally on the bare question. Only the 2024 period
    // summary talks about drones, so the rewritten query should pull the
    // 2024 chunk ahead.
    let c = one_author(vec![
        doc("a2019", "ada", date(2019, 5, 1), "Canopy survey notes.", "Field plot."),
        doc("b2024", "ada", date(2024, 5, 1), "Canopy survey notes.", "Drone flight."),
    ]);
    let p = Providers::from_mock(
        MockProvider::new(64, 7)
            .with_response("Drone flight", "Canopy survey shifted to drone flight.")
            .with_response("Field plot", "Early calibration work.")
            .with_response("shifted to drone", "Canopy survey shifted to drone flight.")
            .with_response("Early calibration", "Early calibration work."),
    );
    let mut cfg = Config::default();
    cfg.agent.scoped_summaries = 1;
    let m = build_memory(&c, "ada", &p, &cfg).unwrap();

    let q = "canopy survey notes";
    let a = answer(&m, q, &p, &cfg).unwrap();
    assert!(a.augmented.semantic_context[0].contains("drone"), "{:?}", a.augmented.semantic_context);
    assert_ne!(a.augmented.rewritten, q);

    let bare = sparse_search(&m.episodic.sparse, q, 2);
    assert_eq!(bare.items.len(), 2);
    assert_eq!(bare.items[0].1, bare.items[1].1, "chunks should tie lexically on the bare query");

    let rank = |query: &str, id: &str| {
        let f = retrieve(&m.episodic, p.embedder.as_ref(), query, 2, &cfg.retrieval).unwrap();
        let pos = f.ids().position(|x| x == id).unwrap();
        pos
    };
    assert!(rank(&a.augmented.rewritten, "b2024#0") < rank(&a.augmented.rewritten, "a2019#0"));
    assert_eq!(a.cited_chunk_ids[0], "b2024#0");
}

#[test]
fn citations_stay_with_their_author() {
    let c = synthetic_corpus(3, 8, &[], 11).validated().unwrap().corpus;
    let cfg = Config::default();
    for aid in ["au000", "au001", "au002"] {
        let m = build_memory(&c, aid, &mock(), &cfg).unwrap();
        let a = answer(&m, "What do you think about thin films and optimization?", &mock(), &cfg).unwrap();
        assert!(a.cited_chunk_ids.iter().all(|id| id.starts_with(&format!("{aid}-"))), "{:?}", a.cited_chunk_ids);
    }
}
