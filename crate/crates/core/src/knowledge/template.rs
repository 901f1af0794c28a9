use serde::{Deserialize, Serialize};

use crate::corpus::LanguageCode;

use super::RelationType;

/// Bumped whenever rendering changes; part of every cache key.
pub const TEMPLATE_VERSION: u32 = 1;

const SUBJECT_ORDER: [RelationType; 6] = [
    RelationType::XAttr,
    RelationType::XNeed,
    RelationType::XIntent,
    RelationType::XEffect,
    RelationType::XWant,
    RelationType::XReact,
];
const OTHERS_ORDER: [RelationType; 3] = [RelationType::OWant, RelationType::OEffect, RelationType::OReact];

/// One inference per relation, indexed by [`RelationType::index`].
/// An empty slot means generation failed or produced nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceBundle {
    pub headline_id: String,
    /// The English (pivot) headline the inferences were generated for.
    pub source_language_text: String,
    pub inferences: [String; RelationType::COUNT],
}

impl InferenceBundle {
    pub fn empty(headline_id: impl Into<String>, headline_en: impl Into<String>) -> Self {
        Self {
            headline_id: headline_id.into(),
            source_language_text: headline_en.into(),
            inferences: Default::default(),
        }
    }

    pub fn get(&self, relation: RelationType) -> &str {
        self.inferences[relation.index()].trim()
    }

    pub fn set(&mut self, relation: RelationType, value: impl Into<String>) {
        self.inferences[relation.index()] = value.into();
    }

    pub fn is_empty(&self) -> bool {
        self.inferences.iter().all(|s| s.trim().is_empty())
    }
}

/// Rendered commonsense knowledge for one headline in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedKnowledge {
    pub headline_id: String,
    pub language: LanguageCode,
    /// The processed paragraph.
    pub text: String,
    /// Per-relation clauses in canonical relation order, empty when the slot was empty.
    pub relations: [String; RelationType::COUNT],
}

fn clause(relation: RelationType, inference: &str) -> String {
    match relation.connector() {
        Some(conn) => format!("{conn} {inference}"),
        None => inference.to_string(),
    }
}

fn sentence(subject: &str, parts: &[String]) -> Option<String> {
    (!parts.is_empty()).then(|| format!("{subject} {}.", parts.join(", ")))
}

/// Stand-alone clause for a single relation, e.g. `PersonX needed to train hard`.
/// Empty when the slot is empty.
pub fn relation_clause(relation: RelationType, inference: &str) -> String {
    let inference = inference.trim();
    if inference.is_empty() {
        return String::new();
    }
    let subject = if relation.is_subject() { "PersonX" } else { "Others" };
    format!("{subject} {}", clause(relation, inference))
}

/// Renders a bundle into the processed paragraph
///
/// `PersonX is {xAttr}, needed {xNeed}, intended {xIntent}, {xEffect}, wants {xWant}, feels {xReact}.
/// Others want {oWant}, {oEffect}, feel {oReact}.`
///
/// Empty slots drop together with their connector; a sentence whose slots
/// are all empty drops entirely.
pub fn process_inferences(bundle: &InferenceBundle) -> ProcessedKnowledge {
    let parts = |order: &[RelationType]| -> Vec<String> {
        order
            .iter()
            .filter(|r| !bundle.get(**r).is_empty())
            .map(|r| clause(*r, bundle.get(*r)))
            .collect()
    };
    let sentences: Vec<String> = [
        sentence("PersonX", &parts(&SUBJECT_ORDER)),
        sentence("Others", &parts(&OTHERS_ORDER)),
    ]
    .into_iter()
    .flatten()
    .collect();
    ProcessedKnowledge {
        headline_id: bundle.headline_id.clone(),
        language: LanguageCode::EN,
        text: sentences.join(" "),
        relations: RelationType::ALL.map(|r| relation_clause(r, bundle.get(r))),
    }
}
