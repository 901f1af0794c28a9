use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Corpus, LanguageCode, Split};

/// Whitespace-token count (Unicode whitespace).
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// One column of the dataset-statistics table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub train: usize,
    pub test: usize,
    pub valid: usize,
    pub unassigned: usize,
    pub total: usize,
    pub words: usize,
    /// Mean words per headline rounded to one decimal; absent for an empty column.
    pub avg_len: Option<f64>,
}

impl LanguageStats {
    fn add(&mut self, split: Split, words: usize) {
        match split {
            Split::Train => self.train += 1,
            Split::Valid => self.valid += 1,
            Split::Test => self.test += 1,
            Split::Unassigned => self.unassigned += 1,
        }
        self.total += 1;
        self.words += words;
    }

    fn finish(&mut self) {
        self.avg_len = (self.total > 0).then(|| round1(self.words as f64 / self.total as f64));
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub all: LanguageStats,
    pub languages: BTreeMap<LanguageCode, LanguageStats>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for rec in &corpus.records {
        let words = word_count(&rec.text);
        stats.all.add(rec.split, words);
        stats.languages.entry(rec.language).or_default().add(rec.split, words);
    }
    stats.all.finish();
    stats.languages.values_mut().for_each(LanguageStats::finish);
    stats
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl CorpusStats {
    /// Aligned plain-text table: `All` followed by one column per language,
    /// rows Train / Test / Valid / Total / Len.
    pub fn to_table(&self) -> String {
        let mut header = vec![String::new(), "All".to_string()];
        header.extend(self.languages.keys().map(|l| l.english_name().to_string()));
        let columns: Vec<&LanguageStats> = std::iter::once(&self.all).chain(self.languages.values()).collect();

        let mut rows = vec![header];
        let count_row = |name: &str, f: fn(&LanguageStats) -> usize| {
            std::iter::once(name.to_string())
                .chain(columns.iter().map(|c| thousands(f(c))))
                .collect::<Vec<_>>()
        };
        rows.push(count_row("Train", |c| c.train));
        rows.push(count_row("Test", |c| c.test));
        rows.push(count_row("Valid", |c| c.valid));
        if columns.iter().any(|c| c.unassigned > 0) {
            rows.push(count_row("Unassigned", |c| c.unassigned));
        }
        rows.push(count_row("Total", |c| c.total));
        rows.push(
            std::iter::once("Len.".to_string())
                .chain(columns.iter().map(|c| c.avg_len.map_or("-".into(), |v| format!("{v:.1}"))))
                .collect(),
        );
        render_aligned(&rows)
    }
}

pub(crate) fn render_aligned(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                let _ = write!(line, "{cell}{}", " ".repeat(pad));
            } else {
                let _ = write!(line, "  {}{cell}", " ".repeat(pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BiasLabel, HeadlineRecord};

    #[test]
    fn grit_won() {
        let corpus = Corpus::new(vec![HeadlineRecord {
            id: "g".into(),
            outlet: "o".into(),
            language: LanguageCode::SV,
            text: "Grit Won".into(),
            label: BiasLabel::LeastBiased,
            split: Split::Unassigned,
            published_at: None,
        }])
        .unwrap();
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.all.total, 1);
        assert_eq!(stats.all.avg_len, Some(2.0));
    }

    #[test]
    fn empty_corpus_has_no_average() {
        let stats = corpus_stats(&Corpus::default());
        assert_eq!(stats.all.total, 0);
        assert_eq!(stats.all.avg_len, None);
        assert!(stats.languages.is_empty());
        let table = stats.to_table();
        let last = table.lines().last().unwrap();
        assert!(last.starts_with("Len.") && last.ends_with('-'), "{table}");
    }

    #[test]
    fn unicode_whitespace_counts() {
        assert_eq!(word_count("  Vodomec\u{00a0}na 32.\tLiffu  "), 4);
        assert_eq!(word_count(""), 0);
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(6269), "6,269");
        assert_eq!(thousands(62689), "62,689");
        assert_eq!(thousands(1234567), "1,234,567");
    }
}
