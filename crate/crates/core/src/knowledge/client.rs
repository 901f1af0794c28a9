use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguageCode;
use crate::http::{HttpError, JsonClient, Method};

use super::RelationType;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslationError {
    #[error("no translation of {text:?} into {tgt}")]
    Missing { text: String, tgt: LanguageCode },
    #[error("translation service: {0}")]
    Service(#[from] HttpError),
    #[error("translation fixture: {0}")]
    Fixture(String),
}

impl TranslationError {
    pub fn is_transient(&self) -> bool {
        matches!(self, TranslationError::Service(e) if e.is_transient())
    }
}

pub trait TranslationClient: Send + Sync {
    fn translate(&self, text: &str, src: LanguageCode, tgt: LanguageCode) -> Result<String, TranslationError>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl TranslationClient for IdentityTranslator {
    fn translate(&self, text: &str, _src: LanguageCode, _tgt: LanguageCode) -> Result<String, TranslationError> {
        Ok(text.to_string())
    }
}

/// Table-backed translator read from a TSV of `source text \t target language \t translation`.
/// Lines starting with `#` are comments. Identity pairs (`src == tgt`) pass through.
#[derive(Debug, Clone, Default)]
pub struct FixtureTranslator {
    table: HashMap<(String, LanguageCode), String>,
}

impl FixtureTranslator {
    pub fn from_tsv(path: &Path) -> Result<Self, TranslationError> {
        let raw = std::fs::read_to_string(path).map_err(|e| TranslationError::Fixture(format!("{}: {e}", path.display())))?;
        Self::parse_tsv(&raw)
    }

    pub fn parse_tsv(raw: &str) -> Result<Self, TranslationError> {
        let mut table = HashMap::new();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [src, tgt, translation] = cols[..] else {
                return Err(TranslationError::Fixture(format!("line {}: expected 3 tab-separated columns", idx + 1)));
            };
            let tgt: LanguageCode = tgt
                .trim()
                .parse()
                .map_err(|e| TranslationError::Fixture(format!("line {}: {e}", idx + 1)))?;
            table.insert((src.to_string(), tgt), translation.to_string());
        }
        Ok(Self { table })
    }

    pub fn insert(&mut self, src_text: impl Into<String>, tgt: LanguageCode, translation: impl Into<String>) {
        self.table.insert((src_text.into(), tgt), translation.into());
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl TranslationClient for FixtureTranslator {
    fn translate(&self, text: &str, src: LanguageCode, tgt: LanguageCode) -> Result<String, TranslationError> {
        if let Some(t) = self.table.get(&(text.to_string(), tgt)) {
            return Ok(t.clone());
        }
        if src == tgt {
            return Ok(text.to_string());
        }
        Err(TranslationError::Missing {
            text: text.to_string(),
            tgt,
        })
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    src: &'a str,
    tgt: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

/// `POST {text, src, tgt}` → `{text}`.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    endpoint: String,
    http: JsonClient,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            http: JsonClient::new(timeout),
        }
    }
}

impl TranslationClient for HttpTranslator {
    fn translate(&self, text: &str, src: LanguageCode, tgt: LanguageCode) -> Result<String, TranslationError> {
        let req = TranslateRequest {
            text,
            src: src.as_str(),
            tgt: tgt.as_str(),
        };
        let resp: TranslateResponse = self.http.call(Method::Post, &self.endpoint, &req)?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CometError {
    /// Network-level failure; retried, then fatal for the headline.
    #[error("commonsense service transport: {0}")]
    Transport(String),
    /// The model could not produce an inference for this relation; the slot stays empty.
    #[error("generation failed: {0}")]
    Generation(String),
}

impl CometError {
    pub fn is_transient(&self) -> bool {
        matches!(self, CometError::Transport(_))
    }
}

impl From<HttpError> for CometError {
    fn from(e: HttpError) -> Self {
        if e.is_transient() {
            CometError::Transport(e.to_string())
        } else {
            CometError::Generation(e.to_string())
        }
    }
}

/// Generative commonsense model: `k` inferences for an English headline and relation.
pub trait CometClient: Send + Sync {
    fn generate(&self, headline_en: &str, relation: RelationType, k: usize) -> Result<Vec<String>, CometError>;

    /// Identifies the model and its parameters; part of the knowledge cache key.
    fn model_id(&self) -> &str;
}

/// Inferences from a JSON object `{ "<english headline>": { "<relation>": ["...", ...] } }`.
/// Unknown headlines or relations generate nothing.
#[derive(Debug, Clone, Default)]
pub struct FixtureComet {
    model_id: String,
    entries: HashMap<String, HashMap<RelationType, Vec<String>>>,
}

impl FixtureComet {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            entries: HashMap::new(),
        }
    }

    pub fn from_json_file(path: &Path, model_id: impl Into<String>) -> Result<Self, CometError> {
        let raw = std::fs::read(path).map_err(|e| CometError::Transport(format!("{}: {e}", path.display())))?;
        let entries = serde_json::from_slice(&raw)
            .map_err(|e| CometError::Transport(format!("{}: {e}", path.display())))?;
        Ok(Self {
            model_id: model_id.into(),
            entries,
        })
    }

    pub fn insert(&mut self, headline_en: impl Into<String>, relation: RelationType, inferences: Vec<String>) {
        self.entries.entry(headline_en.into()).or_default().insert(relation, inferences);
    }

    /// Number of (headline, relation) keys.
    pub fn len(&self) -> usize {
        self.entries.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl CometClient for FixtureComet {
    fn generate(&self, headline_en: &str, relation: RelationType, k: usize) -> Result<Vec<String>, CometError> {
        Ok(self
            .entries
            .get(headline_en)
            .and_then(|rels| rels.get(&relation))
            .map(|v| v.iter().take(k).cloned().collect())
            .unwrap_or_default())
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }
}

#[derive(Serialize)]
struct CometRequest<'a> {
    text: &'a str,
    relation: RelationType,
    k: usize,
}

#[derive(Deserialize)]
struct CometResponse {
    inferences: Vec<String>,
}

/// `POST {text, relation, k}` → `{inferences: [...]}`.
#[derive(Debug, Clone)]
pub struct HttpComet {
    endpoint: String,
    model_id: String,
    http: JsonClient,
}

impl HttpComet {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            http: JsonClient::new(timeout),
        }
    }
}

impl CometClient for HttpComet {
    fn generate(&self, headline_en: &str, relation: RelationType, k: usize) -> Result<Vec<String>, CometError> {
        let req = CometRequest {
            text: headline_en,
            relation,
            k,
        };
        let resp: CometResponse = self.http.call(Method::Post, &self.endpoint, &req)?;
        Ok(resp.inferences)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tsv_fixture_lookup() {
        let tr = FixtureTranslator::parse_tsv(
            "# src\ttgt\ttranslation\n\
             Grit Won\tsl\tGrit je zmagal\n\
             Hekerska skupina\ten\tThe hacker group\n",
        )
        .unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.translate("Grit Won", LanguageCode::EN, LanguageCode::SL).unwrap(), "Grit je zmagal");
        assert_eq!(tr.translate("same", LanguageCode::EN, LanguageCode::EN).unwrap(), "same");
        assert!(matches!(
            tr.translate("unknown", LanguageCode::SL, LanguageCode::EN),
            Err(TranslationError::Missing { .. })
        ));
        assert!(FixtureTranslator::parse_tsv("only\ttwo").is_err());
        assert!(FixtureTranslator::parse_tsv("a\txx\tb").is_err());
    }

    #[test]
    fn comet_fixture_json_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("comet.json");
        std::fs::write(
            &path,
            json!({"Grit Won": {"xAttr": ["lucky", "competitive"], "oReact": ["disappointed"]}}).to_string(),
        )
        .unwrap();
        let kg = FixtureComet::from_json_file(&path, "comet-fixture").unwrap();
        assert_eq!(kg.len(), 2);
        assert_eq!(kg.generate("Grit Won", RelationType::XAttr, 1).unwrap(), ["lucky"]);
        assert_eq!(kg.generate("Grit Won", RelationType::XAttr, 5).unwrap().len(), 2);
        assert!(kg.generate("Grit Won", RelationType::XNeed, 1).unwrap().is_empty());
        assert_eq!(kg.model_id(), "comet-fixture");
    }

    #[test]
    fn http_adapters_follow_contracts() {
        let (url, log) = crate::http::testing::serve(vec![
            (200, json!({"text": "The hacker group"}).to_string()),
            (200, json!({"inferences": ["malicious"]}).to_string()),
            (400, "{}".into()),
            (502, "{}".into()),
        ]);
        let tr = HttpTranslator::new(format!("{url}/translate"), Duration::from_secs(5));
        assert_eq!(
            tr.translate("Hekerska skupina", LanguageCode::SL, LanguageCode::EN).unwrap(),
            "The hacker group"
        );
        let kg = HttpComet::new(format!("{url}/comet"), "comet-http", Duration::from_secs(5));
        assert_eq!(kg.generate("The hacker group", RelationType::XAttr, 1).unwrap(), ["malicious"]);
        assert!(matches!(
            kg.generate("x", RelationType::XAttr, 1),
            Err(CometError::Generation(_))
        ));
        assert!(matches!(kg.generate("x", RelationType::XAttr, 1), Err(CometError::Transport(_))));

        let log = log.lock().unwrap();
        assert_eq!(log[0].method, "POST");
        assert_eq!(log[0].body, json!({"text": "Hekerska skupina", "src": "sl", "tgt": "en"}));
        assert_eq!(log[1].body, json!({"text": "The hacker group", "relation": "xAttr", "k": 1}));
    }
}
