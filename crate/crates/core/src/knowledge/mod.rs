//! Inferential commonsense knowledge via Translate-Retrieve-Translate.
//!
//! A headline is translated into English, the commonsense model generates
//! one inference per social-interaction relation, the inferences are
//! rendered into a processed paragraph, and the paragraph (plus each
//! per-relation clause) is translated back into the headline's language.

mod cache;
mod client;
mod relation;
mod template;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{HeadlineRecord, LanguageCode};
use crate::retry::RetryPolicy;

pub use cache::{
    load_knowledge_store, text_hash, CacheKey, JsonlKnowledgeStore, KnowledgeCache, KnowledgeEntry, MemoryCache,
};
pub use client::{
    CometClient, CometError, FixtureComet, FixtureTranslator, HttpComet, HttpTranslator, IdentityTranslator,
    TranslationClient, TranslationError,
};
pub use relation::{RelationType, UnknownRelation};
pub use template::{process_inferences, relation_clause, InferenceBundle, ProcessedKnowledge, TEMPLATE_VERSION};

/// English is the only language the commonsense graph covers.
pub const PIVOT: LanguageCode = LanguageCode::EN;

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("headline {0:?} has no text to reason about")]
    EmptyHeadline(String),
    #[error("translating headline {id:?}: {source}")]
    Translation {
        id: String,
        #[source]
        source: TranslationError,
    },
    #[error("commonsense model for headline {id:?}: {source}")]
    Comet {
        id: String,
        #[source]
        source: CometError,
    },
    #[error("knowledge cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquireOptions {
    /// Inferences requested per relation. Several are joined with `"; "`.
    pub k: usize,
    /// Translate each per-relation clause back as well as the paragraph.
    pub translate_relations: bool,
    pub retry: RetryPolicy,
}

impl Default for AcquireOptions {
    fn default() -> Self {
        Self {
            k: 1,
            translate_relations: true,
            retry: RetryPolicy::default(),
        }
    }
}

/// One generation per relation, in canonical order.
///
/// A relation whose generation fails or comes back empty leaves an empty
/// slot; transport failures that outlast the retry policy abort the bundle.
pub fn retrieve_inferences(
    client: &dyn CometClient,
    headline_id: &str,
    headline_en: &str,
    opts: &AcquireOptions,
) -> Result<InferenceBundle, KnowledgeError> {
    if headline_en.trim().is_empty() {
        return Err(KnowledgeError::EmptyHeadline(headline_id.to_string()));
    }
    let mut bundle = InferenceBundle::empty(headline_id, headline_en);
    for relation in RelationType::ALL {
        let generated = opts
            .retry
            .run(|| client.generate(headline_en, relation, opts.k), CometError::is_transient);
        match generated {
            Ok(inferences) => {
                let kept: Vec<&str> = inferences
                    .iter()
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .take(opts.k.max(1))
                    .collect();
                if kept.is_empty() {
                    log::debug!("{headline_id}: no {relation} inference");
                }
                bundle.set(relation, kept.join("; "));
            }
            Err(CometError::Generation(msg)) => {
                log::warn!("{headline_id}: {relation} generation failed: {msg}");
            }
            Err(source) => {
                return Err(KnowledgeError::Comet {
                    id: headline_id.to_string(),
                    source,
                })
            }
        }
    }
    Ok(bundle)
}

fn translate(
    tr: &dyn TranslationClient,
    id: &str,
    text: &str,
    src: LanguageCode,
    tgt: LanguageCode,
    retry: &RetryPolicy,
) -> Result<String, KnowledgeError> {
    if src == tgt || text.is_empty() {
        return Ok(text.to_string());
    }
    retry
        .run(|| tr.translate(text, src, tgt), TranslationError::is_transient)
        .map_err(|source| KnowledgeError::Translation {
            id: id.to_string(),
            source,
        })
}

/// translate(l → en) → retrieve → render → translate(en → l), cached.
pub fn acquire_knowledge_trt(
    headline: &HeadlineRecord,
    tr: &dyn TranslationClient,
    kg: &dyn CometClient,
    cache: &dyn KnowledgeCache,
    opts: &AcquireOptions,
) -> Result<ProcessedKnowledge, KnowledgeError> {
    let key = CacheKey::new(headline, kg.model_id(), TEMPLATE_VERSION);
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let lang = headline.language;
    let id = headline.id.as_str();
    let headline_en = translate(tr, id, headline.text.trim(), lang, PIVOT, &opts.retry)?;
    let bundle = retrieve_inferences(kg, id, &headline_en, opts)?;
    let english = process_inferences(&bundle);

    let text = translate(tr, id, &english.text, PIVOT, lang, &opts.retry)?;
    let relations = if opts.translate_relations {
        let mut out: [String; RelationType::COUNT] = Default::default();
        for (slot, clause) in out.iter_mut().zip(&english.relations) {
            *slot = translate(tr, id, clause, PIVOT, lang, &opts.retry)?;
        }
        out
    } else {
        english.relations.clone()
    };
    let knowledge = ProcessedKnowledge {
        headline_id: headline.id.clone(),
        language: lang,
        text,
        relations,
    };
    cache.put(key, knowledge.clone())?;
    Ok(knowledge)
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    /// Successful acquisitions in input order.
    pub entries: Vec<ProcessedKnowledge>,
    /// `(headline id, error message)` for every record that failed.
    pub failures: Vec<(String, String)>,
}

/// Acquires knowledge for every record with up to `parallelism` in flight.
/// Failures are collected per record; the batch never aborts.
pub fn batch_acquire(
    records: &[HeadlineRecord],
    tr: &dyn TranslationClient,
    kg: &dyn CometClient,
    cache: &dyn KnowledgeCache,
    opts: &AcquireOptions,
    parallelism: usize,
) -> BatchOutcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| {
        records
            .par_iter()
            .map(|rec| acquire_knowledge_trt(rec, tr, kg, cache, opts))
            .collect()
    });
    let mut outcome = BatchOutcome::default();
    for (rec, result) in records.iter().zip(results) {
        match result {
            Ok(pk) => outcome.entries.push(pk),
            Err(e) => {
                log::error!("{e}");
                outcome.failures.push((rec.id.clone(), e.to_string()));
            }
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BiasLabel, Split};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting<T> {
        inner: T,
        calls: AtomicUsize,
    }

    impl<T> Counting<T> {
        fn new(inner: T) -> Self {
            Self { inner, calls: AtomicUsize::new(0) }
        }
        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl<T: CometClient> CometClient for Counting<T> {
        fn generate(&self, h: &str, r: RelationType, k: usize) -> Result<Vec<String>, CometError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.generate(h, r, k)
        }
        fn model_id(&self) -> &str {
            self.inner.model_id()
        }
    }

    impl<T: TranslationClient> TranslationClient for Counting<T> {
        fn translate(&self, t: &str, s: LanguageCode, g: LanguageCode) -> Result<String, TranslationError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.translate(t, s, g)
        }
    }

    /// Echoes `<relation>:<headline>` for every relation.
    struct Echo;

    impl CometClient for Echo {
        fn generate(&self, h: &str, r: RelationType, _k: usize) -> Result<Vec<String>, CometError> {
            Ok(vec![format!("r:{r}:{h}")])
        }
        fn model_id(&self) -> &str {
            "echo"
        }
    }

    fn grit_comet() -> FixtureComet {
        let mut kg = FixtureComet::new("comet-atomic2020-fixture");
        for (rel, inf) in [
            (RelationType::XAttr, vec!["lucky", "competitive"]),
            (RelationType::XEffect, vec!["wins the game", "personx wins the race"]),
            (RelationType::XIntent, vec!["to win", "to be the best"]),
            (RelationType::XNeed, vec!["to train hard", "to enter the contest"]),
            (RelationType::XReact, vec!["happy", "excited"]),
            (RelationType::XWant, vec!["to celebrate", "to win"]),
            (RelationType::OEffect, vec!["looses the game", "loses money"]),
            (RelationType::OReact, vec!["disappointed", "sad"]),
            (RelationType::OWant, vec!["to congratulate X", "to win the game"]),
        ] {
            kg.insert("Grit Won", rel, inf.into_iter().map(String::from).collect());
        }
        kg
    }

    fn record(id: &str, language: LanguageCode, text: &str) -> HeadlineRecord {
        HeadlineRecord {
            id: id.into(),
            outlet: "fixture".into(),
            language,
            text: text.into(),
            label: BiasLabel::LeastBiased,
            split: Split::Train,
            published_at: None,
        }
    }

    fn opts() -> AcquireOptions {
        AcquireOptions { retry: RetryPolicy::none(), ..Default::default() }
    }

    #[test]
    fn grit_won_inferences_take_first_of_each_relation() {
        let b = retrieve_inferences(&grit_comet(), "g", "Grit Won", &opts()).unwrap();
        assert_eq!(b.get(RelationType::XAttr), "lucky");
        assert_eq!(b.get(RelationType::XIntent), "to win");
        assert_eq!(b.get(RelationType::XEffect), "wins the game");
        assert_eq!(b.get(RelationType::XReact), "happy");
        assert_eq!(b.get(RelationType::OReact), "disappointed");

        let k2 = AcquireOptions { k: 2, ..opts() };
        let b2 = retrieve_inferences(&grit_comet(), "g", "Grit Won", &k2).unwrap();
        assert_eq!(b2.get(RelationType::XAttr), "lucky; competitive");
    }

    #[test]
    fn silent_model_yields_nine_empty_slots() {
        let b = retrieve_inferences(&FixtureComet::new("empty"), "g", "Grit Won", &opts()).unwrap();
        assert_eq!(b.inferences.len(), 9);
        assert!(b.is_empty());
    }

    #[test]
    fn echo_model_fills_nine_distinct_slots_in_order() {
        let b = retrieve_inferences(&Echo, "g", "Grit Won", &opts()).unwrap();
        for (i, rel) in RelationType::ALL.iter().enumerate() {
            assert_eq!(b.inferences[i], format!("r:{rel}:Grit Won"));
        }
        let distinct: std::collections::HashSet<_> = b.inferences.iter().collect();
        assert_eq!(distinct.len(), 9);
    }

    #[test]
    fn blank_headline_rejected() {
        assert!(matches!(
            retrieve_inferences(&Echo, "g", "  ", &opts()),
            Err(KnowledgeError::EmptyHeadline(_))
        ));
    }

    struct PartlyBroken;

    impl CometClient for PartlyBroken {
        fn generate(&self, _h: &str, r: RelationType, _k: usize) -> Result<Vec<String>, CometError> {
            match r {
                RelationType::XNeed => Err(CometError::Generation("timeout".into())),
                RelationType::OWant => Err(CometError::Transport("reset".into())),
                _ => Ok(vec!["ok".into()]),
            }
        }
        fn model_id(&self) -> &str {
            "broken"
        }
    }

    #[test]
    fn generation_failure_leaves_empty_slot_but_transport_failure_aborts() {
        struct OnlyGenFailure;
        impl CometClient for OnlyGenFailure {
            fn generate(&self, h: &str, r: RelationType, k: usize) -> Result<Vec<String>, CometError> {
                if r == RelationType::OWant { Ok(vec!["fine".into()]) } else { PartlyBroken.generate(h, r, k) }
            }
            fn model_id(&self) -> &str {
                "gen"
            }
        }
        let b = retrieve_inferences(&OnlyGenFailure, "g", "x", &opts()).unwrap();
        assert_eq!(b.get(RelationType::XNeed), "");
        assert_eq!(b.get(RelationType::XAttr), "ok");

        assert!(matches!(
            retrieve_inferences(&PartlyBroken, "g", "x", &opts()),
            Err(KnowledgeError::Comet { source: CometError::Transport(_), .. })
        ));
    }

    #[test]
    fn identity_trt_equals_retrieve_then_process() {
        let rec = record("grit", LanguageCode::EN, "Grit Won");
        let pk = acquire_knowledge_trt(&rec, &IdentityTranslator, &grit_comet(), &MemoryCache::default(), &opts())
            .unwrap();
        let direct = process_inferences(&retrieve_inferences(&grit_comet(), "grit", "Grit Won", &opts()).unwrap());
        assert_eq!(pk, direct);
        assert_eq!(
            pk.text,
            "PersonX is lucky, needed to train hard, intended to win, wins the game, wants to celebrate, \
             feels happy. Others want to congratulate X, looses the game, feel disappointed."
        );
    }

    #[test]
    fn cache_hit_makes_no_client_calls() {
        let rec = record("grit", LanguageCode::SV, "Grit Won");
        let tr = Counting::new(IdentityTranslator);
        let kg = Counting::new(grit_comet());
        let cache = MemoryCache::default();
        let first = acquire_knowledge_trt(&rec, &tr, &kg, &cache, &opts()).unwrap();
        let (tr_calls, kg_calls) = (tr.calls(), kg.calls());
        assert!(tr_calls > 0 && kg_calls == 9);
        let second = acquire_knowledge_trt(&rec, &tr, &kg, &cache, &opts()).unwrap();
        assert_eq!(first, second);
        assert_eq!((tr.calls(), kg.calls()), (tr_calls, kg_calls));

        // edited text misses the cache
        let edited = record("grit", LanguageCode::SV, "Grit Won Again");
        acquire_knowledge_trt(&edited, &tr, &kg, &cache, &opts()).unwrap();
        assert_eq!(kg.calls(), 18);
    }

    #[test]
    fn translation_failure_is_an_error() {
        let rec = record("s", LanguageCode::SL, "Neprevedeno");
        let err = acquire_knowledge_trt(&rec, &FixtureTranslator::default(), &Echo, &MemoryCache::default(), &opts())
            .unwrap_err();
        assert!(matches!(err, KnowledgeError::Translation { .. }));
    }

    #[test]
    fn batch_collects_failures_without_aborting() {
        struct Poisoned;
        impl TranslationClient for Poisoned {
            fn translate(&self, t: &str, _s: LanguageCode, _g: LanguageCode) -> Result<String, TranslationError> {
                if t.contains("poison") {
                    Err(TranslationError::Fixture("boom".into()))
                } else {
                    Ok(t.to_string())
                }
            }
        }
        let records: Vec<_> = (0..10)
            .map(|i| {
                let text = if i == 4 { "poison pill".to_string() } else { format!("headline {i}") };
                record(&format!("h{i}"), LanguageCode::FI, &text)
            })
            .collect();
        let out = batch_acquire(&records, &Poisoned, &Echo, &MemoryCache::default(), &opts(), 4);
        assert_eq!(out.entries.len(), 9);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].0, "h4");
        let ids: Vec<_> = out.entries.iter().map(|e| e.headline_id.as_str()).collect();
        assert_eq!(ids, ["h0", "h1", "h2", "h3", "h5", "h6", "h7", "h8", "h9"]);
    }

    #[test]
    fn batch_resumes_from_file_store() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("knowledge.jsonl");
        let records: Vec<_> = (0..10).map(|i| record(&format!("h{i}"), LanguageCode::RO, &format!("titlu {i}"))).collect();

        {
            let store = JsonlKnowledgeStore::open(&path).unwrap();
            let out = batch_acquire(&records[..5], &IdentityTranslator, &Echo, &store, &opts(), 2);
            assert_eq!(out.entries.len(), 5);
            // dropped here: simulates the process dying after record 5
        }

        let store = JsonlKnowledgeStore::open(&path).unwrap();
        assert_eq!(store.len(), 5);
        let kg = Counting::new(Echo);
        let out = batch_acquire(&records, &IdentityTranslator, &kg, &store, &opts(), 3);
        assert_eq!(out.entries.len(), 10);
        assert_eq!(kg.calls() / RelationType::COUNT, 5);

        // cached values are byte-identical to a fresh computation
        let fresh = batch_acquire(&records, &IdentityTranslator, &Echo, &MemoryCache::default(), &opts(), 1);
        assert_eq!(fresh.entries, out.entries);

        let keys: Vec<_> = records.iter().map(|r| CacheKey::new(r, "echo", TEMPLATE_VERSION)).collect();
        store.compact(&keys).unwrap();
        let loaded = load_knowledge_store(&path).unwrap();
        assert_eq!(loaded.len(), 10);
        assert_eq!(loaded["h3"].knowledge(), out.entries[3]);
    }
}
