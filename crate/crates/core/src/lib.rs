//! Political polarity prediction for multilingual news headlines, infused
//! with inferential commonsense knowledge.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: headline records, label/language vocabularies, stratified
//!   splitting, statistics and translation-error annotations.
//! - [`harvest`]: outlet ratings, temporal queries, paginated fetching and
//!   distant-supervision labelling.
//! - [`knowledge`]: Translate-Retrieve-Translate acquisition of commonsense
//!   inferences and their rendering into a processed paragraph.
//! - [`embed`]: embedding providers (deterministic mock, file stores, HTTP
//!   service) and the `EMB1` store format.
//! - [`model`]: sigmoid-gated knowledge attention, feature fusion, the MLP
//!   classifier, cross-entropy and AdaMax training.
//! - [`eval`]: confusion counts, accuracy, F1, Jaccard, relative performance
//!   and per-language reports.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod harvest;
pub mod knowledge;
pub mod model;

mod http;
pub mod jsonl;
pub mod retry;

pub use corpus::{BiasLabel, Corpus, HeadlineRecord, LanguageCode, Split};
pub use http::HttpError;
