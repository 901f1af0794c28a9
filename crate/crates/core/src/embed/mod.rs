//! Dense vectors for headlines and knowledge.
//!
//! Providers turn text into fixed-dimension vectors. The core ships a
//! seeded mock encoder, file-backed stores of precomputed vectors (the
//! `EMB1` format) and a thin HTTP client; real encoders run elsewhere and
//! hand their output over as store files.

mod mock;
mod service;
mod store;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::http::HttpError;
use crate::knowledge::{relation_clause, InferenceBundle, ProcessedKnowledge, RelationType};

pub use mock::MockEncoder;
pub use service::ServiceProvider;
pub use store::{EmbeddingStore, StoreProvider, EMB1_MAGIC};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("no embedding stored under {0:?}")]
    NotFound(String),
    #[error("duplicate key {0:?} in embedding store")]
    DuplicateKey(String),
    #[error("embedding store: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("embedding service: {0}")]
    Service(#[from] HttpError),
    #[error("unknown provider {0:?} (expected mock, store:<path> or service:<url>)")]
    UnknownProvider(String),
}

/// A finite `f32` vector of positive dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::ZeroDim);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional embedding");
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    /// Cosine similarity; 0 when either vector is zero.
    pub fn cosine(&self, other: &Self) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum();
        let n = self.norm() * other.norm();
        if n == 0.0 {
            0.0
        } else {
            dot / n
        }
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = EmbedError;
    fn try_from(v: Vec<f32>) -> Result<Self, EmbedError> {
        Self::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Nine rows of dimension `d`, one per relation in canonical order, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeEmbedding {
    dim: usize,
    data: Vec<f32>,
}

impl KnowledgeEmbedding {
    pub const ROWS: usize = RelationType::COUNT;

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional embedding");
        Self {
            dim,
            data: vec![0.0; Self::ROWS * dim],
        }
    }

    pub fn from_rows(rows: Vec<EmbeddingVector>) -> Result<Self, EmbedError> {
        if rows.len() != Self::ROWS {
            return Err(EmbedError::Format(format!("expected {} rows, got {}", Self::ROWS, rows.len())));
        }
        let dim = rows[0].dim();
        let mut data = Vec::with_capacity(Self::ROWS * dim);
        for row in rows {
            if row.dim() != dim {
                return Err(EmbedError::Dim { expected: dim, got: row.dim() });
            }
            data.extend(row.into_values());
        }
        Ok(Self { dim, data })
    }

    /// Builds from a flat row-major buffer of length `9 * dim`.
    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        if data.len() != Self::ROWS * dim {
            return Err(EmbedError::Dim { expected: Self::ROWS * dim, got: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(i));
        }
        Ok(Self { dim, data })
    }

    /// The same vector in every row.
    pub fn broadcast(v: &EmbeddingVector) -> Self {
        Self {
            dim: v.dim(),
            data: v.values().repeat(Self::ROWS),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }
}

/// Text → vector. Implementations must be deterministic for a fixed configuration.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    /// Encodes an item that may have been precomputed under `key`.
    /// Content-based providers ignore the key.
    fn encode_keyed(&self, key: &str, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let _ = key;
        self.encode(text)
    }

    /// Batched form of [`encode_keyed`](Self::encode_keyed).
    fn encode_batch(&self, items: &[(&str, &str)]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        items.iter().map(|(k, t)| self.encode_keyed(k, t)).collect()
    }

    /// One row per relation text; empty texts become zero rows.
    fn encode_relations(&self, texts: &[String; RelationType::COUNT]) -> Result<KnowledgeEmbedding, EmbedError> {
        let rows = texts
            .iter()
            .map(|t| if t.trim().is_empty() { Ok(EmbeddingVector::zeros(self.dim())) } else { self.encode(t) })
            .collect::<Result<Vec<_>, _>>()?;
        KnowledgeEmbedding::from_rows(rows)
    }
}

/// How processed knowledge becomes a 9 × d matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowledgeMode {
    /// Each relation clause is encoded into its own row.
    #[default]
    PerRelation,
    /// The whole paragraph is encoded once and repeated in every row.
    WholeText,
}

impl FromStr for KnowledgeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per-relation" => Ok(Self::PerRelation),
            "whole-text" => Ok(Self::WholeText),
            other => Err(format!("unknown knowledge mode {other:?}")),
        }
    }
}

/// Store key of a headline vector.
pub fn headline_key(id: &str) -> String {
    id.to_string()
}

/// Store key of one relation row of a headline's knowledge.
pub fn relation_key(id: &str, relation: RelationType) -> String {
    format!("{id}/{relation}")
}

/// Store key of the whole-paragraph knowledge vector.
pub fn paragraph_key(id: &str) -> String {
    format!("{id}/text")
}

/// Knowledge in either its rendered or its raw form.
#[derive(Debug, Clone, Copy)]
pub enum KnowledgeSource<'a> {
    Processed(&'a ProcessedKnowledge),
    Bundle(&'a InferenceBundle),
}

impl<'a> From<&'a ProcessedKnowledge> for KnowledgeSource<'a> {
    fn from(pk: &'a ProcessedKnowledge) -> Self {
        Self::Processed(pk)
    }
}

impl<'a> From<&'a InferenceBundle> for KnowledgeSource<'a> {
    fn from(b: &'a InferenceBundle) -> Self {
        Self::Bundle(b)
    }
}

/// The `(key, text)` pairs that [`encode_knowledge`] will request.
/// Empty texts are included; they map to zero rows without a provider call.
pub fn knowledge_items<'a>(source: impl Into<KnowledgeSource<'a>>, mode: KnowledgeMode) -> Vec<(String, String)> {
    let (id, paragraph, clauses) = match source.into() {
        KnowledgeSource::Processed(pk) => (pk.headline_id.clone(), pk.text.clone(), pk.relations.clone()),
        KnowledgeSource::Bundle(b) => {
            let pk = crate::knowledge::process_inferences(b);
            let clauses = RelationType::ALL.map(|r| relation_clause(r, b.get(r)));
            (b.headline_id.clone(), pk.text, clauses)
        }
    };
    match mode {
        KnowledgeMode::PerRelation => RelationType::ALL
            .iter()
            .zip(clauses)
            .map(|(r, c)| (relation_key(&id, *r), c))
            .collect(),
        KnowledgeMode::WholeText => vec![(paragraph_key(&id), paragraph)],
    }
}

/// Encodes knowledge into a 9 × d matrix. Empty clauses (or an empty
/// paragraph) yield zero rows.
pub fn encode_knowledge<'a>(
    provider: &dyn EmbeddingProvider,
    source: impl Into<KnowledgeSource<'a>>,
    mode: KnowledgeMode,
) -> Result<KnowledgeEmbedding, EmbedError> {
    let items = knowledge_items(source, mode);
    let dim = provider.dim();
    let wanted: Vec<(&str, &str)> = items
        .iter()
        .filter(|(_, t)| !t.trim().is_empty())
        .map(|(k, t)| (k.as_str(), t.as_str()))
        .collect();
    let mut encoded = provider.encode_batch(&wanted)?.into_iter();
    let mut rows = Vec::with_capacity(items.len());
    for (_, text) in &items {
        let row = if text.trim().is_empty() {
            EmbeddingVector::zeros(dim)
        } else {
            encoded.next().expect("one vector per request")
        };
        if row.dim() != dim {
            return Err(EmbedError::Dim { expected: dim, got: row.dim() });
        }
        rows.push(row);
    }
    match mode {
        KnowledgeMode::PerRelation => KnowledgeEmbedding::from_rows(rows),
        KnowledgeMode::WholeText => Ok(KnowledgeEmbedding::broadcast(&rows[0])),
    }
}

/// Provider choice as written in configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProviderSpec {
    Mock,
    Store(PathBuf),
    Service(String),
}

impl FromStr for ProviderSpec {
    type Err = EmbedError;
    fn from_str(s: &str) -> Result<Self, EmbedError> {
        if s == "mock" {
            Ok(Self::Mock)
        } else if let Some(p) = s.strip_prefix("store:").filter(|p| !p.is_empty()) {
            Ok(Self::Store(PathBuf::from(p)))
        } else if let Some(u) = s.strip_prefix("service:").filter(|u| !u.is_empty()) {
            Ok(Self::Service(u.to_string()))
        } else {
            Err(EmbedError::UnknownProvider(s.to_string()))
        }
    }
}

impl TryFrom<String> for ProviderSpec {
    type Error = EmbedError;
    fn try_from(s: String) -> Result<Self, EmbedError> {
        s.parse()
    }
}

impl From<ProviderSpec> for String {
    fn from(p: ProviderSpec) -> Self {
        p.to_string()
    }
}

impl std::fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Mock => f.write_str("mock"),
            Self::Store(p) => write!(f, "store:{}", p.display()),
            Self::Service(u) => write!(f, "service:{u}"),
        }
    }
}

impl ProviderSpec {
    /// Instantiates the provider. `dim` and `seed` configure the mock encoder;
    /// `dim` is checked against a service's reply.
    pub fn build(&self, dim: usize, seed: u64, timeout: Duration) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
        Ok(match self {
            Self::Mock => Box::new(MockEncoder::new(dim, seed)?),
            Self::Store(path) => Box::new(StoreProvider::new(EmbeddingStore::read(path)?)),
            Self::Service(url) => Box::new(ServiceProvider::new(url.clone(), dim, timeout)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LanguageCode;

    fn pk(relations: [&str; 9]) -> ProcessedKnowledge {
        ProcessedKnowledge {
            headline_id: "h1".into(),
            language: LanguageCode::EN,
            text: "PersonX is calm.".into(),
            relations: relations.map(String::from),
        }
    }

    #[test]
    fn vectors_reject_bad_values() {
        assert!(matches!(EmbeddingVector::new(vec![]), Err(EmbedError::ZeroDim)));
        assert!(matches!(EmbeddingVector::new(vec![1.0, f32::NAN]), Err(EmbedError::NonFinite(1))));
        let v: EmbeddingVector = serde_json::from_str("[0.5,1.5]").unwrap();
        assert_eq!(v.dim(), 2);
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }

    #[test]
    fn empty_knowledge_is_zero_matrix() {
        let enc = MockEncoder::new(8, 1).unwrap();
        let k = encode_knowledge(&enc, &pk([""; 9]), KnowledgeMode::PerRelation).unwrap();
        assert_eq!(k, KnowledgeEmbedding::zeros(8));
        let b = InferenceBundle::empty("h", "x");
        assert_eq!(encode_knowledge(&enc, &b, KnowledgeMode::PerRelation).unwrap(), KnowledgeEmbedding::zeros(8));
        assert_eq!(encode_knowledge(&enc, &b, KnowledgeMode::WholeText).unwrap(), KnowledgeEmbedding::zeros(8));
    }

    #[test]
    fn distinct_clauses_give_distinct_rows() {
        let enc = MockEncoder::new(16, 7).unwrap();
        let clauses = ["PersonX is a", "PersonX b", "PersonX intended c", "PersonX needed d", "PersonX feels e",
            "PersonX wants f", "Others g", "Others feel h", "Others want i"];
        let k = encode_knowledge(&enc, &pk(clauses), KnowledgeMode::PerRelation).unwrap();
        for i in 0..9 {
            assert_eq!(k.row(i), enc.encode(clauses[i]).unwrap().values());
            for j in i + 1..9 {
                assert_ne!(k.row(i), k.row(j));
            }
        }
    }

    #[test]
    fn whole_text_broadcasts() {
        let enc = MockEncoder::new(4, 7).unwrap();
        let k = encode_knowledge(&enc, &pk(["x"; 9]), KnowledgeMode::WholeText).unwrap();
        let para = enc.encode("PersonX is calm.").unwrap();
        assert!(k.rows().all(|r| r == para.values()));
    }

    #[test]
    fn bundle_and_processed_agree() {
        let enc = MockEncoder::new(8, 3).unwrap();
        let mut b = InferenceBundle::empty("h1", "Grit Won");
        b.set(RelationType::XAttr, "lucky");
        b.set(RelationType::OReact, "sad");
        let processed = crate::knowledge::process_inferences(&b);
        for mode in [KnowledgeMode::PerRelation, KnowledgeMode::WholeText] {
            assert_eq!(
                encode_knowledge(&enc, &b, mode).unwrap(),
                encode_knowledge(&enc, &processed, mode).unwrap()
            );
        }
        let items = knowledge_items(&b, KnowledgeMode::PerRelation);
        assert_eq!(items[0], ("h1/xAttr".to_string(), "PersonX is lucky".to_string()));
        assert_eq!(knowledge_items(&b, KnowledgeMode::WholeText)[0].0, "h1/text");
    }

    #[test]
    fn provider_spec_parsing() {
        assert_eq!("mock".parse::<ProviderSpec>().unwrap(), ProviderSpec::Mock);
        assert_eq!(
            "store:/tmp/a.emb1".parse::<ProviderSpec>().unwrap(),
            ProviderSpec::Store("/tmp/a.emb1".into())
        );
        assert_eq!(
            "service:http://localhost:9000/encode".parse::<ProviderSpec>().unwrap(),
            ProviderSpec::Service("http://localhost:9000/encode".into())
        );
        for bad in ["", "store:", "remote:x", "Mock"] {
            assert!(bad.parse::<ProviderSpec>().is_err(), "{bad}");
        }
        let spec = ProviderSpec::Store("x.emb1".into());
        assert_eq!(spec.to_string().parse::<ProviderSpec>().unwrap(), spec);
    }

    #[test]
    fn knowledge_matrix_shape_checks() {
        assert!(KnowledgeEmbedding::from_flat(2, vec![0.0; 17]).is_err());
        let k = KnowledgeEmbedding::from_flat(2, (0..18).map(|i| i as f32).collect()).unwrap();
        assert_eq!(k.row(8), &[16.0, 17.0]);
        assert!(KnowledgeEmbedding::from_rows(vec![EmbeddingVector::zeros(2); 8]).is_err());
    }
}
