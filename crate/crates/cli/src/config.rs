//! Pipeline configuration: one TOML file, paths relative to its directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use polarlens_core::corpus::{SplitRatios, StratifyKey};
use polarlens_core::embed::{KnowledgeMode, ProviderSpec};
use polarlens_core::model::TrainConfig;
use polarlens_core::retry::RetryPolicy;
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub config_version: u32,
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub harvest: Option<HarvestSection>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub knowledge: Option<KnowledgeSection>,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub train: TrainConfig,
    /// Directory the relative paths were resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub ratings: Option<PathBuf>,
    /// Harvest output, unsplit.
    #[serde(default)]
    pub raw_corpus: Option<PathBuf>,
    /// Split corpus read by every later stage.
    pub corpus: PathBuf,
    #[serde(default = "default_knowledge")]
    pub knowledge: PathBuf,
    #[serde(default = "default_embeddings")]
    pub embeddings: PathBuf,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: PathBuf,
    #[serde(default = "default_reports")]
    pub reports: PathBuf,
    /// Annotations to validate and store (JSON Lines of `headline_id, category, comment`).
    #[serde(default)]
    pub annotations_input: Option<PathBuf>,
    #[serde(default = "default_annotations")]
    pub annotations: PathBuf,
}

fn default_knowledge() -> PathBuf {
    "knowledge.jsonl".into()
}
fn default_embeddings() -> PathBuf {
    "embeddings.emb1".into()
}
fn default_checkpoints() -> PathBuf {
    "checkpoints".into()
}
fn default_reports() -> PathBuf {
    "reports".into()
}
fn default_annotations() -> PathBuf {
    "annotations.jsonl".into()
}

/// `fixture:<dir>` or `service:<url>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Fixture(PathBuf),
    Service(String),
}

impl Source {
    fn parse(s: &str, allow_identity: bool) -> Result<Option<Self>, String> {
        if allow_identity && s == "identity" {
            return Ok(None);
        }
        if let Some(p) = s.strip_prefix("fixture:").filter(|p| !p.is_empty()) {
            Ok(Some(Self::Fixture(p.into())))
        } else if let Some(u) = s.strip_prefix("service:").filter(|u| !u.is_empty()) {
            Ok(Some(Self::Service(u.into())))
        } else {
            Err(format!("expected fixture:<path> or service:<url>, got {s:?}"))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestSection {
    pub news: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(default)]
    pub categories: Option<Vec<String>>,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    #[serde(default)]
    pub stratify: StratifyKey,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { ratios: default_ratios(), stratify: StratifyKey::default() }
    }
}

fn default_ratios() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeSection {
    /// `identity`, `fixture:<tsv>` or `service:<url>`.
    #[serde(default = "identity")]
    pub translator: String,
    /// `fixture:<json>` or `service:<url>`.
    pub comet: String,
    pub model_id: String,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "yes")]
    pub translate_relations: bool,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn identity() -> String {
    "identity".into()
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn default_timeout() -> u64 {
    30_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    #[serde(default = "mock")]
    pub provider: ProviderSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub knowledge_mode: KnowledgeMode,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self { provider: ProviderSpec::Mock, dim: default_dim(), knowledge_mode: KnowledgeMode::default(), timeout_ms: default_timeout() }
    }
}

fn mock() -> ProviderSpec {
    ProviderSpec::Mock
}
fn default_dim() -> usize {
    64
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&raw, &base)
    }

    pub fn parse(raw: &str, base_dir: &Path) -> Result<Self, CliError> {
        let version: toml::Table = toml::from_str(raw).map_err(|e| CliError::Config(e.to_string()))?;
        match version.get("config_version").and_then(toml::Value::as_integer) {
            Some(v) if v == i64::from(CONFIG_VERSION) => {}
            Some(v) => return Err(CliError::Config(format!("unsupported config_version {v} (expected {CONFIG_VERSION})"))),
            None => return Err(CliError::Config("config_version is missing".into())),
        }
        let mut cfg: PipelineConfig = toml::from_str(raw).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.split_ratios()?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.embedding.dim == 0 {
            return Err(CliError::Config("embedding.dim must be positive".into()));
        }
        if let Some(h) = &self.harvest {
            Source::parse(&h.news, false).map_err(|e| CliError::Config(format!("harvest.news: {e}")))?;
            if h.start > h.end {
                return Err(CliError::Config(format!("harvest.start {} is after harvest.end {}", h.start, h.end)));
            }
        }
        if let Some(k) = &self.knowledge {
            Source::parse(&k.translator, true).map_err(|e| CliError::Config(format!("knowledge.translator: {e}")))?;
            Source::parse(&k.comet, false).map_err(|e| CliError::Config(format!("knowledge.comet: {e}")))?;
            if k.k == 0 {
                return Err(CliError::Config("knowledge.k must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn split_ratios(&self) -> Result<SplitRatios, CliError> {
        let [a, b, c] = self.split.ratios;
        SplitRatios::new(a, b, c).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn harvest_section(&self) -> Result<&HarvestSection, CliError> {
        self.harvest.as_ref().ok_or_else(|| CliError::Config("the [harvest] section is missing".into()))
    }

    pub fn knowledge_section(&self) -> Result<&KnowledgeSection, CliError> {
        self.knowledge.as_ref().ok_or_else(|| CliError::Config("the [knowledge] section is missing".into()))
    }

    pub fn news_source(&self) -> Result<Source, CliError> {
        let s = Source::parse(&self.harvest_section()?.news, false).map_err(CliError::Config)?;
        Ok(self.resolve_source(s.expect("identity not allowed")))
    }

    /// `None` means the identity translator.
    pub fn translator_source(&self) -> Result<Option<Source>, CliError> {
        let s = Source::parse(&self.knowledge_section()?.translator, true).map_err(CliError::Config)?;
        Ok(s.map(|s| self.resolve_source(s)))
    }

    pub fn comet_source(&self) -> Result<Source, CliError> {
        let s = Source::parse(&self.knowledge_section()?.comet, false).map_err(CliError::Config)?;
        Ok(self.resolve_source(s.expect("identity not allowed")))
    }

    fn resolve_source(&self, s: Source) -> Source {
        match s {
            Source::Fixture(p) => Source::Fixture(self.resolve(&p)),
            other => other,
        }
    }

    pub fn provider(&self) -> ProviderSpec {
        match &self.embedding.provider {
            ProviderSpec::Store(p) => ProviderSpec::Store(self.resolve(p)),
            other => other.clone(),
        }
    }

    pub fn embedding_timeout(&self) -> Duration {
        Duration::from_millis(self.embedding.timeout_ms)
    }

    pub fn ratings_path(&self) -> Result<PathBuf, CliError> {
        self.paths
            .ratings
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| CliError::Config("paths.ratings is not set".into()))
    }

    /// Where harvest writes and split reads; falls back to the corpus path's sibling `raw.jsonl`.
    pub fn raw_corpus_path(&self) -> PathBuf {
        match &self.paths.raw_corpus {
            Some(p) => self.resolve(p),
            None => self.resolve(&self.paths.corpus).with_file_name("raw.jsonl"),
        }
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.paths.corpus)
    }
    pub fn knowledge_path(&self) -> PathBuf {
        self.resolve(&self.paths.knowledge)
    }
    pub fn embeddings_path(&self) -> PathBuf {
        self.resolve(&self.paths.embeddings)
    }
    pub fn checkpoints_dir(&self) -> PathBuf {
        self.resolve(&self.paths.checkpoints)
    }
    pub fn reports_dir(&self) -> PathBuf {
        self.resolve(&self.paths.reports)
    }
    pub fn annotations_path(&self) -> PathBuf {
        self.resolve(&self.paths.annotations)
    }
}
