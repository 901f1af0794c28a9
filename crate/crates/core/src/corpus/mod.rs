//! The annotated multilingual headline corpus.

mod annotation;
mod label;
mod split;
mod stats;

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use annotation::{AnnotationError, AnnotationStore, ErrorCategory, TranslationErrorAnnotation};
pub use label::{BiasLabel, LanguageCode, LanguageRegistry, UnknownLabel, UnknownLanguage};
pub use split::{stratified_split, SplitError, SplitOutcome, SplitRatios, SplitWarning, StratifyKey};
pub use stats::{corpus_stats, word_count, CorpusStats, LanguageStats};
pub(crate) use stats::render_aligned;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ASSIGNED: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "validation" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One headline with its distant-supervision label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineRecord {
    pub id: String,
    pub outlet: String,
    pub language: LanguageCode,
    pub text: String,
    pub label: BiasLabel,
    #[serde(default)]
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything that is not `.csv` is JSON Lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Language {
        line: usize,
        #[source]
        source: UnknownLanguage,
    },
    #[error("line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: UnknownLabel,
    },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },
}

/// Ordered headline collection. Ids are unique; texts are non-blank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<HeadlineRecord>,
    pub provenance: String,
}

/// Row shape shared by the JSON Lines and CSV readers; validated into a record.
#[derive(Debug, Deserialize)]
struct RawRow {
    id: String,
    outlet: String,
    language: String,
    text: String,
    label: String,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    published_at: Option<String>,
}

impl RawRow {
    fn validate(self, line: usize, registry: &LanguageRegistry) -> Result<HeadlineRecord, CorpusError> {
        let malformed = |message: String| CorpusError::Malformed { line, message };
        if self.id.trim().is_empty() {
            return Err(malformed("empty id".into()));
        }
        if self.text.trim().is_empty() {
            return Err(malformed("headline text is blank".into()));
        }
        let language = registry
            .parse(self.language.trim())
            .map_err(|source| CorpusError::Language { line, source })?;
        let label = self
            .label
            .parse()
            .map_err(|source| CorpusError::Label { line, source })?;
        let split = match self.split.as_deref() {
            None => Split::Unassigned,
            Some(s) => s.parse().map_err(malformed)?,
        };
        let published_at = match self.published_at.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(ts) => Some(
                DateTime::parse_from_rfc3339(ts)
                    .map_err(|e| malformed(format!("published_at {ts:?}: {e}")))?
                    .with_timezone(&Utc),
            ),
        };
        Ok(HeadlineRecord {
            id: self.id,
            outlet: self.outlet,
            language,
            text: self.text,
            label,
            split,
            published_at,
        })
    }
}

impl Corpus {
    pub fn new(records: Vec<HeadlineRecord>) -> Result<Self, CorpusError> {
        let corpus = Corpus {
            records,
            provenance: String::new(),
        };
        corpus.check_unique_ids()?;
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&HeadlineRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &HeadlineRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    fn check_unique_ids(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::with_capacity(self.records.len());
        for (idx, rec) in self.records.iter().enumerate() {
            if !seen.insert(rec.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    line: idx + 1,
                    id: rec.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Loads and validates a corpus file. Fails on the first bad row.
    pub fn load(path: &Path, format: CorpusFormat, registry: &LanguageRegistry) -> Result<Self, CorpusError> {
        let records = match format {
            CorpusFormat::Jsonl => read_jsonl_rows(path, registry)?,
            CorpusFormat::Csv => read_csv_rows(path, registry)?,
        };
        let mut corpus = Corpus::new(records)?;
        corpus.provenance = path.display().to_string();
        Ok(corpus)
    }

    /// Writes JSON Lines with keys in `id, outlet, language, text, label, split, published_at` order.
    pub fn write_jsonl(&self, path: &Path) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Convenience wrapper over [`Corpus::load`] with the built-in languages.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    Corpus::load(path, format, &LanguageRegistry::default())
}

fn read_jsonl_rows(path: &Path, registry: &LanguageRegistry) -> Result<Vec<HeadlineRecord>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRow = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(raw.validate(line_no, registry)?);
    }
    Ok(records)
}

fn read_csv_rows(path: &Path, registry: &LanguageRegistry) -> Result<Vec<HeadlineRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_to_corpus_error(e, 1))?;
    let mut records = Vec::new();
    for (idx, row) in reader.deserialize::<RawRow>().enumerate() {
        // header occupies line 1
        let line_no = idx + 2;
        let raw = row.map_err(|e| csv_to_corpus_error(e, line_no))?;
        records.push(raw.validate(line_no, registry)?);
    }
    Ok(records)
}

fn csv_to_corpus_error(err: csv::Error, fallback_line: usize) -> CorpusError {
    let line = err
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => CorpusError::Io(io),
            other => CorpusError::Malformed {
                line,
                message: format!("{other:?}"),
            },
        }
    } else {
        CorpusError::Malformed {
            line,
            message: err.to_string(),
        }
    }
}
