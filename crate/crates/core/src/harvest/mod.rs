//! Headline collection: outlet ratings, temporal queries, paginated
//! fetching, and distant-supervision labelling.
//!
//! Every headline inherits the bias rating of the outlet that published it.
//! Outlets flagged as questionable never reach the fetch stage.

mod client;
mod query;

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{BiasLabel, Corpus, HeadlineRecord, LanguageCode, Split};
use crate::retry::RetryPolicy;

pub use client::{
    fetch_headlines, fetch_many, FixtureNewsClient, HttpNewsClient, NewsProviderClient, Page, ProviderError,
    RawHeadline,
};
pub use query::{build_temporal_query, TemporalQuery, DEFAULT_CATEGORY};

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("fetching {outlet}: {source}")]
    Fetch {
        outlet: String,
        #[source]
        source: ProviderError,
    },
    #[error("outlet {0:?} is rated questionable and cannot be labelled")]
    QuestionableOutlet(String),
    #[error("ratings file: {0}")]
    Ratings(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutletRating {
    pub outlet: String,
    pub language: LanguageCode,
    pub bias: BiasLabel,
    pub questionable: bool,
}

/// Reads the static ratings list and checks `(outlet, language)` uniqueness.
pub fn load_ratings(path: &Path) -> Result<Vec<OutletRating>, HarvestError> {
    let bytes = std::fs::read(path).map_err(|e| HarvestError::Ratings(format!("{}: {e}", path.display())))?;
    let ratings: Vec<OutletRating> =
        serde_json::from_slice(&bytes).map_err(|e| HarvestError::Ratings(format!("{}: {e}", path.display())))?;
    let mut seen = HashSet::new();
    for r in &ratings {
        if !seen.insert((r.outlet.as_str(), r.language)) {
            return Err(HarvestError::Ratings(format!(
                "duplicate rating for ({}, {})",
                r.outlet, r.language
            )));
        }
    }
    Ok(ratings)
}

pub fn filter_questionable(ratings: &[OutletRating]) -> Vec<OutletRating> {
    ratings.iter().filter(|r| !r.questionable).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelWarning {
    LanguageMismatch { id: String, reported: String },
    BadTimestamp { id: String, raw: String },
}

#[derive(Debug, Clone, Default)]
pub struct Labelled {
    pub records: Vec<HeadlineRecord>,
    pub warnings: Vec<LabelWarning>,
}

/// Stamps every payload with the outlet's bias and language.
///
/// A payload whose provider-reported language disagrees with the rating is
/// kept under the rating's language and reported as a warning.
pub fn label_headlines(payloads: &[RawHeadline], rating: &OutletRating) -> Result<Labelled, HarvestError> {
    if rating.questionable {
        return Err(HarvestError::QuestionableOutlet(rating.outlet.clone()));
    }
    let mut out = Labelled::default();
    for p in payloads {
        let id = p.dedup_key(&rating.outlet);
        if let Some(reported) = p.language.as_deref() {
            if reported != rating.language.as_str() {
                log::warn!("{id}: provider language {reported:?} differs from {}", rating.language);
                out.warnings.push(LabelWarning::LanguageMismatch {
                    id: id.clone(),
                    reported: reported.to_string(),
                });
            }
        }
        let published_at = match p.published_at.as_deref() {
            None => None,
            Some(raw) => match DateTime::parse_from_rfc3339(raw) {
                Ok(ts) => Some(ts.with_timezone(&Utc)),
                Err(_) => {
                    log::warn!("{id}: unparsable timestamp {raw:?}");
                    out.warnings.push(LabelWarning::BadTimestamp {
                        id: id.clone(),
                        raw: raw.to_string(),
                    });
                    None
                }
            },
        };
        out.records.push(HeadlineRecord {
            id,
            outlet: rating.outlet.clone(),
            language: rating.language,
            text: p.title.trim().to_string(),
            label: rating.bias,
            split: Split::Unassigned,
            published_at,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HarvestPlan {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub categories: Option<Vec<String>>,
    pub retry: RetryPolicy,
    pub parallelism: usize,
}

#[derive(Debug)]
pub struct HarvestOutcome {
    pub corpus: Corpus,
    /// Outlets whose fetch failed; their headlines are absent from `corpus`.
    pub failures: Vec<HarvestError>,
    pub warnings: Vec<LabelWarning>,
}

/// filter → query → fetch → label, in ratings order.
///
/// Records whose id was already produced by an earlier outlet are dropped.
pub fn harvest(
    ratings: &[OutletRating],
    client: &dyn NewsProviderClient,
    plan: &HarvestPlan,
) -> Result<HarvestOutcome, HarvestError> {
    let kept = filter_questionable(ratings);
    let queries = kept
        .iter()
        .map(|r| build_temporal_query(&r.outlet, r.language, plan.categories.clone(), plan.start, plan.end))
        .collect::<Result<Vec<_>, _>>()?;
    let fetched = fetch_many(client, &queries, &plan.retry, plan.parallelism);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    let mut ids = HashSet::new();
    for (rating, result) in kept.iter().zip(fetched) {
        let payloads = match result {
            Ok(p) => p,
            Err(e) => {
                log::error!("{e}");
                failures.push(e);
                continue;
            }
        };
        let labelled = label_headlines(&payloads, rating)?;
        warnings.extend(labelled.warnings);
        for rec in labelled.records {
            if ids.insert(rec.id.clone()) {
                records.push(rec);
            } else {
                log::warn!("{}: id {:?} already harvested from another outlet", rating.outlet, rec.id);
            }
        }
    }
    let corpus = Corpus::new(records).expect("ids de-duplicated above");
    Ok(HarvestOutcome {
        corpus,
        failures,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rating(outlet: &str, language: LanguageCode, bias: BiasLabel, questionable: bool) -> OutletRating {
        OutletRating {
            outlet: outlet.into(),
            language,
            bias,
            questionable,
        }
    }

    fn sample_outlets() -> Vec<OutletRating> {
        vec![
            rating("24ur", LanguageCode::SL, BiasLabel::LeastBiased, false),
            rating("Dagens Nyheter", LanguageCode::SV, BiasLabel::LeftCenter, false),
            rating("Delo", LanguageCode::SL, BiasLabel::LeftCenter, false),
            rating("Digi24", LanguageCode::RO, BiasLabel::LeastBiased, false),
            rating("Helsingin Sanomat", LanguageCode::FI, BiasLabel::LeftCenter, false),
            rating("Hotnews", LanguageCode::RO, BiasLabel::RightCenter, false),
            rating("Novinky", LanguageCode::CS, BiasLabel::LeftCenter, false),
        ]
    }

    #[test]
    fn filter_keeps_unquestionable_in_order() {
        assert!(filter_questionable(&[]).is_empty());
        let outlets = sample_outlets();
        assert_eq!(filter_questionable(&outlets), outlets);

        let mixed = vec![
            rating("A", LanguageCode::CS, BiasLabel::LeftCenter, false),
            rating("B", LanguageCode::CS, BiasLabel::RightCenter, true),
            rating("C", LanguageCode::FI, BiasLabel::LeastBiased, false),
        ];
        let oracle: Vec<OutletRating> = mixed.iter().filter(|r| !r.questionable).cloned().collect();
        let got = filter_questionable(&mixed);
        assert_eq!(got.len(), 2);
        assert_eq!(got, oracle);
    }

    fn payload(id: &str, title: &str) -> RawHeadline {
        RawHeadline {
            id: Some(id.into()),
            title: title.into(),
            published_at: Some("2022-02-27T10:15:00Z".into()),
            language: None,
        }
    }

    #[test]
    fn labels_are_constant_per_outlet() {
        let payloads: Vec<_> = (0..5).map(|i| payload(&format!("p{i}"), "Naslov")).collect();
        let r = rating("Delo", LanguageCode::SL, BiasLabel::LeftCenter, false);
        let out = label_headlines(&payloads, &r).unwrap();
        assert_eq!(out.records.len(), 5);
        assert!(out
            .records
            .iter()
            .all(|rec| rec.label == BiasLabel::LeftCenter && rec.language == LanguageCode::SL && rec.outlet == "Delo"));
        assert_eq!(out.records[3].id, "p3");
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn questionable_rating_refused() {
        let r = rating("Bad", LanguageCode::SL, BiasLabel::RightCenter, true);
        assert!(matches!(
            label_headlines(&[payload("x", "t")], &r),
            Err(HarvestError::QuestionableOutlet(_))
        ));
    }

    #[test]
    fn mixed_language_payload_kept_with_warning() {
        let mut odd = payload("p1", "English headline");
        odd.language = Some("en".into());
        let r = rating("24ur", LanguageCode::SL, BiasLabel::LeastBiased, false);
        let out = label_headlines(&[payload("p0", "Slovenski naslov"), odd], &r).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[1].language, LanguageCode::SL);
        assert_eq!(
            out.warnings,
            vec![LabelWarning::LanguageMismatch { id: "p1".into(), reported: "en".into() }]
        );
    }

    #[test]
    fn bad_timestamp_dropped_with_warning() {
        let mut p = payload("p0", "x");
        p.published_at = Some("yesterday".into());
        let out = label_headlines(&[p], &sample_outlets()[0]).unwrap();
        assert_eq!(out.records[0].published_at, None);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn ratings_file_rejects_duplicates() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            f.path(),
            r#"[{"outlet":"Delo","language":"sl","bias":"Left Center","questionable":false},
                {"outlet":"Delo","language":"sl","bias":"least-biased","questionable":false}]"#,
        )
        .unwrap();
        assert!(matches!(load_ratings(f.path()), Err(HarvestError::Ratings(_))));
    }
}
