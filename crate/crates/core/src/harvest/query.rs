use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::LanguageCode;

use super::HarvestError;

pub const DEFAULT_CATEGORY: &str = "news";

/// Crawl request for one outlet: who, which language, which categories, and
/// an inclusive date window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalQuery {
    pub outlet: String,
    pub language: LanguageCode,
    pub categories: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TemporalQuery {
    /// Stable short identifier; fixture page directories are named after it.
    pub fn hash_hex(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("query serializes");
        let digest = Sha256::digest(&canonical);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

pub fn build_temporal_query(
    outlet: &str,
    language: LanguageCode,
    categories: Option<Vec<String>>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<TemporalQuery, HarvestError> {
    if outlet.trim().is_empty() {
        return Err(HarvestError::InvalidQuery("outlet is empty".into()));
    }
    if start > end {
        return Err(HarvestError::InvalidQuery(format!("start {start} is after end {end}")));
    }
    let categories = match categories {
        Some(c) if !c.is_empty() => c,
        _ => vec![DEFAULT_CATEGORY.to_string()],
    };
    Ok(TemporalQuery {
        outlet: outlet.to_string(),
        language,
        categories,
        start,
        end,
    })
}
