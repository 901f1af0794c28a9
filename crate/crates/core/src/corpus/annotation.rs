use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

/// Manual taxonomy of machine-translation failures observed in headlines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    EntityDetection,
    Comprehension,
    ImproperSentenceFormation,
    InversionOfMeaning,
    Miscellaneous,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::EntityDetection,
        ErrorCategory::Comprehension,
        ErrorCategory::ImproperSentenceFormation,
        ErrorCategory::InversionOfMeaning,
        ErrorCategory::Miscellaneous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::EntityDetection => "EntityDetection",
            ErrorCategory::Comprehension => "Comprehension",
            ErrorCategory::ImproperSentenceFormation => "ImproperSentenceFormation",
            ErrorCategory::InversionOfMeaning => "InversionOfMeaning",
            ErrorCategory::Miscellaneous => "Miscellaneous",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().to_ascii_lowercase() == folded)
            .ok_or_else(|| AnnotationError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationErrorAnnotation {
    pub headline_id: String,
    pub category: ErrorCategory,
    pub comment: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("headline {0:?} is not in the corpus")]
    DanglingHeadline(String),
    #[error("unknown translation-error category {0:?}")]
    UnknownCategory(String),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

/// Append-only list of annotations; several per headline are allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationStore {
    annotations: Vec<TranslationErrorAnnotation>,
}

impl AnnotationStore {
    pub fn load(path: &Path) -> Result<Self, AnnotationError> {
        Ok(Self {
            annotations: read_jsonl(path)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), AnnotationError> {
        write_jsonl(path, &self.annotations).map_err(JsonlError::from)?;
        Ok(())
    }

    pub fn annotate(&mut self, corpus: &Corpus, ann: TranslationErrorAnnotation) -> Result<(), AnnotationError> {
        if corpus.get(&ann.headline_id).is_none() {
            return Err(AnnotationError::DanglingHeadline(ann.headline_id));
        }
        self.annotations.push(ann);
        Ok(())
    }

    pub fn list(&self) -> &[TranslationErrorAnnotation] {
        &self.annotations
    }

    pub fn for_headline<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a TranslationErrorAnnotation> {
        self.annotations.iter().filter(move |a| a.headline_id == id)
    }

    /// Count per category; every category is present, possibly with zero.
    pub fn histogram(&self) -> BTreeMap<ErrorCategory, usize> {
        let mut hist: BTreeMap<ErrorCategory, usize> = ErrorCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for ann in &self.annotations {
            *hist.entry(ann.category).or_default() += 1;
        }
        hist
    }
}
