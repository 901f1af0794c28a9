//! Classification metrics over the three bias classes.
//!
//! Confusion counts are one-vs-rest per class. A ratio whose denominator is
//! zero evaluates to 0 and the class is flagged in the report.

mod report;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{BiasLabel, Corpus, LanguageCode};
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

pub use report::{render_language_table, render_overall_table, round2, ExperimentReport, RunReport};

const K: usize = BiasLabel::COUNT;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no records to evaluate")]
    Empty,
    #[error("baseline metric is zero")]
    ZeroBaseline,
    #[error("prediction {0:?} has no matching corpus record")]
    Unjoinable(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub classes: [ClassCounts; K],
    pub n: u64,
}

impl ConfusionCounts {
    pub fn class(&self, label: BiasLabel) -> &ClassCounts {
        &self.classes[label.index()]
    }

    fn pooled(&self) -> (u64, u64, u64) {
        self.classes.iter().fold((0, 0, 0), |(tp, fp, fn_), c| (tp + c.tp, fp + c.fp, fn_ + c.fn_))
    }

    /// Correct / total; 0 for no records.
    pub fn accuracy(&self) -> f64 {
        ratio(self.classes.iter().map(|c| c.tp).sum(), self.n)
    }
}

pub fn confusion(truth: &[BiasLabel], pred: &[BiasLabel]) -> Result<ConfusionCounts, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    let mut c = ConfusionCounts { n: truth.len() as u64, ..Default::default() };
    for (&t, &p) in truth.iter().zip(pred) {
        for label in BiasLabel::ALL {
            let cc = &mut c.classes[label.index()];
            match (t == label, p == label) {
                (true, true) => cc.tp += 1,
                (true, false) => cc.fn_ += 1,
                (false, true) => cc.fp += 1,
                (false, false) => cc.tn += 1,
            }
        }
    }
    Ok(c)
}

pub fn accuracy(truth: &[BiasLabel], pred: &[BiasLabel]) -> Result<f64, EvalError> {
    let c = confusion(truth, pred)?;
    if c.n == 0 {
        return Err(EvalError::Empty);
    }
    Ok(c.accuracy())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Micro,
}

/// 2TP / (2TP + FP + FN).
pub fn class_f1(c: &ClassCounts) -> f64 {
    ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_)
}

/// TP / (TP + FP + FN).
pub fn class_jaccard(c: &ClassCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp + c.fn_)
}

pub fn f1(counts: &ConfusionCounts, averaging: Averaging) -> f64 {
    match averaging {
        Averaging::Macro => counts.classes.iter().map(class_f1).sum::<f64>() / K as f64,
        Averaging::Micro => {
            let (tp, fp, fn_) = counts.pooled();
            ratio(2 * tp, 2 * tp + fp + fn_)
        }
    }
}

pub fn jaccard(counts: &ConfusionCounts, averaging: Averaging) -> f64 {
    match averaging {
        Averaging::Macro => counts.classes.iter().map(class_jaccard).sum::<f64>() / K as f64,
        Averaging::Micro => {
            let (tp, fp, fn_) = counts.pooled();
            ratio(tp, tp + fp + fn_)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: BiasLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
    /// True instances of the class.
    pub support: u64,
    /// Some ratio had a zero denominator and was set to 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub macro_jaccard: f64,
    pub micro_jaccard: f64,
    pub classes: Vec<ClassMetrics>,
    pub confusion: ConfusionCounts,
    /// Classes with a zero-division somewhere in their metrics.
    pub flagged: Vec<BiasLabel>,
}

impl MetricReport {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let classes: Vec<ClassMetrics> = BiasLabel::ALL
            .iter()
            .map(|&label| {
                let k = c.class(label);
                ClassMetrics {
                    label,
                    precision: ratio(k.tp, k.tp + k.fp),
                    recall: ratio(k.tp, k.tp + k.fn_),
                    f1: class_f1(k),
                    jaccard: class_jaccard(k),
                    support: k.tp + k.fn_,
                    zero_division: k.tp + k.fp == 0 || k.tp + k.fn_ == 0,
                }
            })
            .collect();
        Self {
            n: c.n,
            accuracy: c.accuracy(),
            macro_f1: f1(c, Averaging::Macro),
            micro_f1: f1(c, Averaging::Micro),
            macro_jaccard: jaccard(c, Averaging::Macro),
            micro_jaccard: jaccard(c, Averaging::Micro),
            flagged: classes.iter().filter(|m| m.zero_division).map(|m| m.label).collect(),
            classes,
            confusion: *c,
        }
    }

    pub fn from_labels(truth: &[BiasLabel], pred: &[BiasLabel]) -> Result<Self, EvalError> {
        let c = confusion(truth, pred)?;
        if c.n == 0 {
            return Err(EvalError::Empty);
        }
        Ok(Self::from_counts(&c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePerformance {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

impl RelativePerformance {
    /// The ratio as printed in reports.
    pub fn rounded(&self) -> f64 {
        round2(self.ratio)
    }
}

pub fn relative_performance(candidate: f64, baseline: f64) -> Result<RelativePerformance, EvalError> {
    if baseline <= 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(RelativePerformance { numerator: candidate, denominator: baseline, ratio: candidate / baseline })
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub predicted_label: BiasLabel,
    pub probabilities: [f64; K],
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<(), EvalError> {
    Ok(write_jsonl(path, preds)?)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, EvalError> {
    Ok(read_jsonl(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub overall: MetricReport,
    pub languages: BTreeMap<LanguageCode, MetricReport>,
}

/// Joins predictions to corpus records by id and reports overall and per
/// language (counts pooled within each language).
pub fn language_breakdown(corpus: &Corpus, predictions: &[Prediction]) -> Result<Breakdown, EvalError> {
    let index: HashMap<&str, _> = corpus.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut all = (Vec::new(), Vec::new());
    let mut by_lang: BTreeMap<LanguageCode, (Vec<BiasLabel>, Vec<BiasLabel>)> = BTreeMap::new();
    for p in predictions {
        let rec = index.get(p.id.as_str()).ok_or_else(|| EvalError::Unjoinable(p.id.clone()))?;
        all.0.push(rec.label);
        all.1.push(p.predicted_label);
        let slot = by_lang.entry(rec.language).or_default();
        slot.0.push(rec.label);
        slot.1.push(p.predicted_label);
    }
    let overall = MetricReport::from_labels(&all.0, &all.1)?;
    let languages = by_lang
        .into_iter()
        .map(|(lang, (t, p))| Ok((lang, MetricReport::from_labels(&t, &p)?)))
        .collect::<Result<_, EvalError>>()?;
    Ok(Breakdown { overall, languages })
}
