use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BiasLabel, Corpus, LanguageCode, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self, SplitError> {
        let ratios = Self { train, valid, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        let parts = self.as_array();
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(SplitError::InvalidRatios(*self));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SplitError::InvalidRatios(*self));
        }
        Ok(())
    }

    /// In `Split::ASSIGNED` order: train, valid, test.
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.valid, self.test]
    }

    /// Largest-remainder apportionment of `n` items; ties go to the earlier split.
    pub fn apportion(&self, n: usize) -> [usize; 3] {
        let quotas = self.as_array().map(|r| r * n as f64);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &idx in order.iter().take(n.saturating_sub(assigned)) {
            counts[idx] += 1;
        }
        counts
    }
}

/// What a stratum is keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyKey {
    #[default]
    LanguageLabel,
    Language,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios(SplitRatios),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitWarning {
    pub language: LanguageCode,
    pub label: Option<BiasLabel>,
    pub size: usize,
}

impl std::fmt::Display for SplitWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.label {
            Some(label) => write!(f, "stratum ({}, {label})", self.language)?,
            None => write!(f, "stratum ({})", self.language)?,
        }
        write!(f, " has {} record(s); assigned to train", self.size)
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub corpus: Corpus,
    pub warnings: Vec<SplitWarning>,
}

type StratumKey = (LanguageCode, Option<BiasLabel>);

fn stratum_rng(seed: u64, key: &StratumKey) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key.0.as_str().as_bytes());
    hasher.update([key.1.map_or(u8::MAX, |l| l.index() as u8)]);
    let digest = hasher.finalize();
    let mut rng_seed = [0u8; 32];
    rng_seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(rng_seed)
}

/// Assigns every record to train/valid/test, stratum by stratum.
///
/// Each stratum is shuffled with a generator derived from `seed` and the
/// stratum key, so adding records to one stratum never reshuffles another.
/// Strata with fewer than three members go entirely to train when all three
/// ratios are nonzero.
pub fn stratified_split(
    corpus: &Corpus,
    ratios: SplitRatios,
    seed: u64,
    key: StratifyKey,
) -> Result<SplitOutcome, SplitError> {
    ratios.validate()?;
    let mut strata: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for (idx, rec) in corpus.records.iter().enumerate() {
        let label = match key {
            StratifyKey::LanguageLabel => Some(rec.label),
            StratifyKey::Language => None,
        };
        strata.entry((rec.language, label)).or_default().push(idx);
    }

    let all_nonzero = ratios.as_array().iter().all(|r| *r > 0.0);
    let mut out = corpus.clone();
    let mut warnings = Vec::new();
    for (stratum, mut members) in strata {
        if members.len() < 3 && all_nonzero {
            let warning = SplitWarning {
                language: stratum.0,
                label: stratum.1,
                size: members.len(),
            };
            log::warn!("{warning}");
            warnings.push(warning);
            for idx in members {
                out.records[idx].split = Split::Train;
            }
            continue;
        }
        members.shuffle(&mut stratum_rng(seed, &stratum));
        let counts = ratios.apportion(members.len());
        let mut cursor = members.into_iter();
        for (split, count) in Split::ASSIGNED.into_iter().zip(counts) {
            for idx in cursor.by_ref().take(count) {
                out.records[idx].split = split;
            }
        }
    }
    Ok(SplitOutcome {
        corpus: out,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::HeadlineRecord;
    use proptest::prelude::*;

    fn record(id: usize, language: LanguageCode, label: BiasLabel) -> HeadlineRecord {
        HeadlineRecord {
            id: format!("r{id}"),
            outlet: "outlet".into(),
            language,
            text: format!("headline {id}"),
            label,
            split: Split::Unassigned,
            published_at: None,
        }
    }

    fn counts(corpus: &Corpus) -> [usize; 3] {
        Split::ASSIGNED.map(|s| corpus.split(s).count())
    }

    #[test]
    fn ten_records_split_eight_one_one() {
        let corpus =
            Corpus::new((0..10).map(|i| record(i, LanguageCode::FI, BiasLabel::LeftCenter)).collect()).unwrap();
        let out = stratified_split(&corpus, SplitRatios::default(), 7, StratifyKey::LanguageLabel).unwrap();
        assert_eq!(counts(&out.corpus), [8, 1, 1]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn tiny_stratum_goes_to_train_with_warning() {
        let corpus = Corpus::new(vec![
            record(0, LanguageCode::SV, BiasLabel::RightCenter),
            record(1, LanguageCode::SV, BiasLabel::RightCenter),
        ])
        .unwrap();
        let out = stratified_split(&corpus, SplitRatios::default(), 1, StratifyKey::LanguageLabel).unwrap();
        assert_eq!(counts(&out.corpus), [2, 0, 0]);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].size, 2);
    }

    #[test]
    fn zero_ratio_allows_tiny_stratum() {
        let corpus = Corpus::new(vec![
            record(0, LanguageCode::SV, BiasLabel::RightCenter),
            record(1, LanguageCode::SV, BiasLabel::RightCenter),
        ])
        .unwrap();
        let ratios = SplitRatios::new(0.5, 0.0, 0.5).unwrap();
        let out = stratified_split(&corpus, ratios, 1, StratifyKey::LanguageLabel).unwrap();
        assert_eq!(counts(&out.corpus), [1, 0, 1]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn invalid_ratios_rejected() {
        assert!(SplitRatios::new(0.8, 0.1, 0.2).is_err());
        assert!(SplitRatios::new(1.2, -0.1, -0.1).is_err());
        assert!(SplitRatios::new(f64::NAN, 0.5, 0.5).is_err());
    }

    #[test]
    fn apportion_largest_remainder() {
        let r = SplitRatios::default();
        assert_eq!(r.apportion(0), [0, 0, 0]);
        assert_eq!(r.apportion(10), [8, 1, 1]);
        // quotas 10.4 / 1.3 / 1.3 -> floors 10/1/1, one seat to the largest remainder (train)
        assert_eq!(r.apportion(13), [11, 1, 1]);
        // quotas 12 / 1.5 / 1.5 -> the earlier split wins the tie
        assert_eq!(r.apportion(15), [12, 2, 1]);
    }

    #[test]
    fn skewed_two_language_corpus_by_enumeration() {
        // cs: 700 left-center, 50 least-biased; sl: 150 right-center, 100 least-biased
        let layout = [
            (LanguageCode::CS, BiasLabel::LeftCenter, 700),
            (LanguageCode::CS, BiasLabel::LeastBiased, 50),
            (LanguageCode::SL, BiasLabel::RightCenter, 150),
            (LanguageCode::SL, BiasLabel::LeastBiased, 100),
        ];
        let mut records = Vec::new();
        for (lang, label, n) in layout {
            for _ in 0..n {
                records.push(record(records.len(), lang, label));
            }
        }
        let corpus = Corpus::new(records).unwrap();
        let ratios = SplitRatios::default();
        let out = stratified_split(&corpus, ratios, 99, StratifyKey::LanguageLabel).unwrap();
        for (lang, label, n) in layout {
            for (split, ratio) in Split::ASSIGNED.into_iter().zip(ratios.as_array()) {
                let got = out
                    .corpus
                    .records
                    .iter()
                    .filter(|r| r.language == lang && r.label == label && r.split == split)
                    .count();
                assert!(
                    (got as f64 - ratio * n as f64).abs() <= 1.0,
                    "{lang}/{label}/{split}: {got} of {n}"
                );
            }
        }
    }

    #[test]
    fn language_only_key() {
        let mut records = Vec::new();
        for i in 0..20 {
            let label = if i % 4 == 0 { BiasLabel::RightCenter } else { BiasLabel::LeftCenter };
            records.push(record(i, LanguageCode::RO, label));
        }
        let corpus = Corpus::new(records).unwrap();
        let out = stratified_split(&corpus, SplitRatios::default(), 3, StratifyKey::Language).unwrap();
        assert_eq!(counts(&out.corpus), [16, 2, 2]);
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        prop::collection::vec((0usize..5, 0usize..3), 0..300).prop_map(|rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (lang, label))| {
                    record(i, LanguageCode::CORPUS[lang], BiasLabel::from_index(label).unwrap())
                })
                .collect();
            Corpus::new(records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn split_is_a_deterministic_stratified_partition(corpus in arb_corpus(), seed in any::<u64>()) {
            let ratios = SplitRatios::default();
            let a = stratified_split(&corpus, ratios, seed, StratifyKey::LanguageLabel).unwrap();
            let b = stratified_split(&corpus, ratios, seed, StratifyKey::LanguageLabel).unwrap();
            prop_assert_eq!(&a.corpus, &b.corpus);
            prop_assert_eq!(a.corpus.len(), corpus.len());
            prop_assert!(a.corpus.records.iter().all(|r| r.split != Split::Unassigned));

            let mut strata: BTreeMap<(LanguageCode, BiasLabel), Vec<Split>> = BTreeMap::new();
            for r in &a.corpus.records {
                strata.entry((r.language, r.label)).or_default().push(r.split);
            }
            for splits in strata.values().filter(|s| s.len() >= 10) {
                let n = splits.len() as f64;
                for (split, ratio) in Split::ASSIGNED.into_iter().zip(ratios.as_array()) {
                    let frac = splits.iter().filter(|s| **s == split).count() as f64 / n;
                    prop_assert!((frac - ratio).abs() <= 1.0 / n + 1e-12);
                }
            }
        }
    }
}
