use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{render_aligned, LanguageCode};

use super::{relative_performance, Breakdown, MetricReport};

/// Two-decimal rounding used in every printed table.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn cell(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// One trained configuration evaluated on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub breakdown: Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroScores {
    pub accuracy: f64,
    pub micro_f1: f64,
    pub micro_jaccard: f64,
}

impl From<&MetricReport> for MicroScores {
    fn from(r: &MetricReport) -> Self {
        Self { accuracy: r.accuracy, micro_f1: r.micro_f1, micro_jaccard: r.micro_jaccard }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageCell {
    pub run: String,
    pub scores: MicroScores,
    /// Ratios against the baseline run; absent for the baseline itself, and
    /// per metric when the baseline scored zero.
    pub relative: Option<BTreeMap<String, Option<f64>>>,
    pub flagged: bool,
}

/// All runs of an experiment; `baseline` names the run that ratios refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub baseline: String,
    pub runs: Vec<RunReport>,
}

impl ExperimentReport {
    fn baseline_run(&self) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.name == self.baseline)
    }

    /// Per language: baseline scores and every other run relative to it.
    pub fn language_cells(&self) -> BTreeMap<LanguageCode, Vec<LanguageCell>> {
        let mut out: BTreeMap<LanguageCode, Vec<LanguageCell>> = BTreeMap::new();
        let base = self.baseline_run();
        for run in &self.runs {
            for (lang, report) in &run.breakdown.languages {
                let scores = MicroScores::from(report);
                let relative = match base.and_then(|b| b.breakdown.languages.get(lang)) {
                    Some(b) if run.name != self.baseline => {
                        let b = MicroScores::from(b);
                        let rp = |c: f64, d: f64| relative_performance(c, d).ok().map(|r| r.ratio);
                        Some(BTreeMap::from([
                            ("accuracy".to_string(), rp(scores.accuracy, b.accuracy)),
                            ("micro_f1".to_string(), rp(scores.micro_f1, b.micro_f1)),
                            ("micro_jaccard".to_string(), rp(scores.micro_jaccard, b.micro_jaccard)),
                        ]))
                    }
                    _ => None,
                };
                out.entry(*lang).or_default().push(LanguageCell {
                    run: run.name.clone(),
                    scores,
                    relative,
                    flagged: !report.flagged.is_empty(),
                });
            }
        }
        out
    }

    pub fn overall_json(&self) -> serde_json::Value {
        serde_json::json!({
            "baseline": self.baseline,
            "runs": self.runs.iter().map(|r| serde_json::json!({
                "name": r.name,
                "overall": r.breakdown.overall,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn language_json(&self) -> serde_json::Value {
        let languages: BTreeMap<String, Vec<LanguageCell>> =
            self.language_cells().into_iter().map(|(l, cells)| (l.as_str().to_string(), cells)).collect();
        serde_json::json!({
            "baseline": self.baseline,
            "languages": languages,
        })
    }

    pub fn overall_table(&self) -> String {
        let runs: Vec<(&str, &MetricReport)> = self.runs.iter().map(|r| (r.name.as_str(), &r.breakdown.overall)).collect();
        render_overall_table(&runs)
    }

    pub fn language_table(&self) -> String {
        render_language_table(self)
    }
}

/// Rows are runs; columns accuracy, macro F1 and macro Jaccard, then the
/// micro scores.
pub fn render_overall_table(runs: &[(&str, &MetricReport)]) -> String {
    let mut rows = vec![["", "A", "F1", "J_m", "F1_mu", "J_mu", "n"].map(String::from).to_vec()];
    for (name, r) in runs {
        rows.push(vec![
            name.to_string(),
            cell(r.accuracy),
            cell(r.macro_f1),
            cell(r.macro_jaccard),
            cell(r.micro_f1),
            cell(r.micro_jaccard),
            r.n.to_string(),
        ]);
    }
    render_aligned(&rows)
}

/// Rows are languages. The baseline run shows absolute A / F1_mu / J_mu;
/// every other run shows its ratio to the baseline. Languages where some
/// class had a zero denominator are starred.
pub fn render_language_table(report: &ExperimentReport) -> String {
    let cells = report.language_cells();
    let mut order: Vec<&str> = vec![report.baseline.as_str()];
    order.extend(report.runs.iter().map(|r| r.name.as_str()).filter(|n| *n != report.baseline));

    let mut head1 = vec![String::new()];
    let mut head2 = vec!["Language".to_string()];
    for name in &order {
        head1.extend([name.to_string(), String::new(), String::new()]);
        head2.extend(["A", "F1_mu", "J_mu"].map(String::from));
    }
    let mut rows = vec![head1, head2];
    let mut langs: Vec<_> = cells.iter().collect();
    langs.sort_by_key(|(l, _)| l.english_name());
    let mut any_flag = false;
    for (lang, lang_cells) in langs {
        let flagged = lang_cells.iter().any(|c| c.flagged);
        any_flag |= flagged;
        let mut row = vec![format!("{}{}", lang.english_name(), if flagged { "*" } else { "" })];
        for name in &order {
            match lang_cells.iter().find(|c| c.run == *name) {
                None => row.extend(std::iter::repeat_n("-".to_string(), 3)),
                Some(c) => match &c.relative {
                    None => row.extend([c.scores.accuracy, c.scores.micro_f1, c.scores.micro_jaccard].map(cell)),
                    Some(rel) => row.extend(
                        ["accuracy", "micro_f1", "micro_jaccard"]
                            .map(|k| rel.get(k).copied().flatten().map_or("n/a".to_string(), cell)),
                    ),
                },
            }
        }
        rows.push(row);
    }
    let mut out = render_aligned(&rows);
    if any_flag {
        out.push_str("* some class has no true or no predicted instances; its ratios count as 0\n");
    }
    out
}
