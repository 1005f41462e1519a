//! Life-stage analysis: authors split into quintiles of equal document mass
//! by final activity, each author's output cut into consecutive stages of a
//! few documents, and the mean number of trending words per document
//! reported per (quintile, stage).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::burst::BurstInterval;
use crate::corpus::{Corpus, TermId};
use crate::num::Real;

pub const DEFAULT_MIN_ACTIVITY: u64 = 10;
pub const DEFAULT_STAGE_SIZE: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LifecycleError {
    #[error("only {retained} authors have at least {min_activity} documents; 5 are needed")]
    TooFewAuthors { retained: usize, min_activity: u64 },
    #[error("no bursty words given")]
    NoBurstyWords,
    #[error("stage size must be positive")]
    ZeroStageSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuintileAssignment {
    /// Final activity of the author closing each of the first four quintiles.
    pub cutoffs: [u64; 4],
    /// Documents produced by each quintile's authors.
    pub document_mass: [u64; 5],
    pub retained_total: u64,
    /// Largest final activity among retained authors.
    pub max_activity: u64,
    pub min_activity: u64,
    author_quintile: BTreeMap<String, u8>,
}

impl QuintileAssignment {
    /// Quintile 1 (least active) to 5, or `None` for excluded authors.
    pub fn quintile(&self, author: &str) -> Option<u8> {
        self.author_quintile.get(author).copied()
    }

    pub fn authors(&self) -> impl Iterator<Item = (&str, u8)> {
        self.author_quintile.iter().map(|(a, &q)| (a.as_str(), q))
    }

    pub fn retained_authors(&self) -> usize {
        self.author_quintile.len()
    }
}

/// Lifetime document count per author; co-authored documents count for each author.
pub fn author_final_activity(corpus: &Corpus) -> BTreeMap<&str, u64> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in corpus.documents() {
        for a in &doc.author_ids {
            *counts.entry(a.as_str()).or_default() += 1;
        }
    }
    counts
}

/// Assigns retained authors (final activity `>= min_activity`) to quintiles.
///
/// Authors are sorted by `(final activity, key)` and accumulated; quintile
/// `k` closes with the author at which the cumulative count first reaches
/// `k/5` of the retained total. Each quintile's mass therefore differs from
/// a fifth of the total by less than the largest single author's activity.
pub fn quintile_cutoffs(corpus: &Corpus, min_activity: u64) -> Result<QuintileAssignment, LifecycleError> {
    let mut retained: Vec<(u64, &str)> = author_final_activity(corpus)
        .into_iter()
        .filter(|&(_, n)| n >= min_activity)
        .map(|(a, n)| (n, a))
        .collect();
    if retained.len() < 5 {
        return Err(LifecycleError::TooFewAuthors {
            retained: retained.len(),
            min_activity,
        });
    }
    retained.sort();
    let total: u64 = retained.iter().map(|&(n, _)| n).sum();
    let max_activity = retained.last().map(|&(n, _)| n).unwrap_or(0);

    let mut cutoffs = [0u64; 4];
    let mut document_mass = [0u64; 5];
    let mut author_quintile = BTreeMap::new();
    let mut quintile = 1u8;
    let mut cumulative = 0u64;
    for &(n, author) in &retained {
        author_quintile.insert(author.to_string(), quintile);
        document_mass[quintile as usize - 1] += n;
        cumulative += n;
        // integer form of cumulative >= quintile * total / 5
        while quintile < 5 && cumulative * 5 >= quintile as u64 * total {
            cutoffs[quintile as usize - 1] = n;
            quintile += 1;
        }
    }
    Ok(QuintileAssignment {
        cutoffs,
        document_mass,
        retained_total: total,
        max_activity,
        min_activity,
        author_quintile,
    })
}

/// A trending word and its burst, for stage counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstyWord {
    pub word: String,
    pub start_bucket: u32,
    pub end_bucket: u32,
}

impl<R> From<&BurstInterval<R>> for BurstyWord {
    fn from(b: &BurstInterval<R>) -> Self {
        Self {
            word: b.word.clone(),
            start_bucket: b.start_bucket,
            end_bucket: b.end_bucket,
        }
    }
}

/// When a bursty word counts toward a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsageWindow {
    /// Any time in the author's history.
    #[default]
    Anytime,
    /// Only when the document falls inside the word's burst interval.
    Burst,
}

impl std::str::FromStr for UsageWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anytime" | "any" => Ok(UsageWindow::Anytime),
            "burst" | "within-burst" => Ok(UsageWindow::Burst),
            other => Err(format!("unknown usage window '{other}' (expected anytime or burst)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeStageRow<R> {
    pub quintile: u8,
    /// Stage `s` covers an author's documents `5s+1 ..= 5s+5`.
    pub stage: u32,
    pub docs: u64,
    pub bursty_words: u64,
    pub avg_bursty_words: R,
    /// One of the three middle quintiles.
    pub middle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeStageTable<R> {
    pub rows: Vec<LifeStageRow<R>>,
    pub stage_size: usize,
}

impl<R: Real> LifeStageTable<R> {
    pub fn middle_rows(&self) -> impl Iterator<Item = &LifeStageRow<R>> {
        self.rows.iter().filter(|r| r.middle)
    }

    pub fn get(&self, quintile: u8, stage: u32) -> Option<&LifeStageRow<R>> {
        self.rows.iter().find(|r| r.quintile == quintile && r.stage == stage)
    }
}

/// Average number of distinct bursty words per document for every
/// (quintile, life stage) cell. Incomplete trailing stages are dropped.
pub fn life_stage_usage<R: Real>(
    corpus: &Corpus,
    assignment: &QuintileAssignment,
    bursty: &[BurstyWord],
    stage_size: usize,
    window: UsageWindow,
) -> Result<LifeStageTable<R>, LifecycleError> {
    if bursty.is_empty() {
        return Err(LifecycleError::NoBurstyWords);
    }
    if stage_size == 0 {
        return Err(LifecycleError::ZeroStageSize);
    }
    let intervals: HashMap<TermId, (u32, u32)> = bursty
        .iter()
        .filter_map(|b| corpus.term_id(&b.word).map(|t| (t, (b.start_bucket, b.end_bucket))))
        .collect();

    let doc_count = |doc: usize| -> u64 {
        let bucket = corpus.bucket_of(doc);
        corpus
            .doc_terms(doc)
            .iter()
            .filter(|t| match (intervals.get(t), window) {
                (None, _) => false,
                (Some(_), UsageWindow::Anytime) => true,
                (Some(&(s, e)), UsageWindow::Burst) => (s..=e).contains(&bucket),
            })
            .count() as u64
    };

    let mut histories: BTreeMap<&str, (u8, Vec<usize>)> = BTreeMap::new();
    for (idx, doc) in corpus.documents().iter().enumerate() {
        for a in &doc.author_ids {
            if let Some(q) = assignment.quintile(a) {
                histories
                    .entry(a.as_str())
                    .or_insert_with(|| (q, Vec::new()))
                    .1
                    .push(idx);
            }
        }
    }

    let mut cells: BTreeMap<(u8, u32), (u64, u64)> = BTreeMap::new();
    for (quintile, docs) in histories.values() {
        for (stage, chunk) in docs.chunks_exact(stage_size).enumerate() {
            let cell = cells.entry((*quintile, stage as u32)).or_default();
            cell.0 += chunk.len() as u64;
            cell.1 += chunk.iter().map(|&d| doc_count(d)).sum::<u64>();
        }
    }

    let rows = cells
        .into_iter()
        .map(|((quintile, stage), (docs, words))| LifeStageRow {
            quintile,
            stage,
            docs,
            bursty_words: words,
            avg_bursty_words: R::from_count(words) / R::from_count(docs),
            middle: (2..=4).contains(&quintile),
        })
        .collect();
    Ok(LifeStageTable { rows, stage_size })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Granularity};
    use proptest::prelude::*;

    fn doc(id: String, author: &str, ts: i64, tokens: &[&str]) -> Document {
        Document {
            doc_id: id,
            author_ids: vec![author.to_string()],
            timestamp: ts,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            producer_id: None,
            kind: None,
        }
    }

    fn population(activities: &[u64]) -> Corpus {
        let mut docs = Vec::new();
        for (a, &n) in activities.iter().enumerate() {
            for i in 0..n {
                docs.push(doc(format!("{a}-{i}"), &format!("author{a:03}"), i as i64, &[]));
            }
        }
        Corpus::from_documents(docs, Granularity::Week, Some(0)).unwrap()
    }

    #[test]
    fn symmetric_authors_one_per_quintile() {
        let q = quintile_cutoffs(&population(&[10; 5]), 10).unwrap();
        assert_eq!(q.document_mass, [10; 5]);
        let mut qs: Vec<u8> = q.authors().map(|(_, q)| q).collect();
        qs.sort();
        assert_eq!(qs, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn heavy_author_sits_alone() {
        let q = quintile_cutoffs(&population(&[10, 10, 10, 10, 40]), 10).unwrap();
        let heavy = q.quintile("author004").unwrap();
        assert_eq!(q.authors().filter(|&(_, x)| x == heavy).count(), 1);
        assert!(q.authors().all(|(_, x)| x <= heavy));
        for m in q.document_mass {
            assert!(m.abs_diff(16) <= 40);
        }
    }

    #[test]
    fn low_activity_authors_excluded() {
        let q = quintile_cutoffs(&population(&[9, 10, 10, 10, 10, 10]), 10).unwrap();
        assert_eq!(q.quintile("author000"), None);
        assert_eq!(q.retained_total, 50);
        assert_eq!(q.retained_authors(), 5);
    }

    #[test]
    fn too_few_authors() {
        assert_eq!(
            quintile_cutoffs(&population(&[3, 3, 3, 3, 3]), 10),
            Err(LifecycleError::TooFewAuthors {
                retained: 0,
                min_activity: 10
            })
        );
    }

    #[test]
    fn stages_drop_incomplete_chunk_and_count_distinct_words() {
        let mut docs = Vec::new();
        for a in 0..5 {
            let n = if a == 0 { 12 } else { 10 };
            for i in 0..n {
                let toks: &[&str] = if a == 0 && i == 0 {
                    &["u", "v", "u", "x"]
                } else {
                    &["x"]
                };
                docs.push(doc(format!("{a}-{i}"), &format!("a{a}"), i as i64, toks));
            }
        }
        let corpus = Corpus::from_documents(docs, Granularity::Week, Some(0)).unwrap();
        let q = quintile_cutoffs(&corpus, 10).unwrap();
        let words = ["u", "v"].map(|w| BurstyWord {
            word: w.into(),
            start_bucket: 0,
            end_bucket: 0,
        });
        let table: LifeStageTable<f64> = life_stage_usage(&corpus, &q, &words, 5, UsageWindow::Anytime).unwrap();
        let first_q = q.quintile("a0").unwrap();
        let row = table.get(first_q, 0).unwrap();
        assert_eq!(row.docs, 5);
        assert_eq!(row.bursty_words, 2);
        assert_eq!(row.avg_bursty_words, 0.4);
        assert!(table.get(first_q, 2).is_none());
        assert_eq!(table.rows.iter().map(|r| r.docs).sum::<u64>(), 50);
    }

    #[test]
    fn burst_window_restricts_counting() {
        let mut docs = Vec::new();
        for a in 0..5 {
            for i in 0..10 {
                docs.push(doc(
                    format!("{a}-{i}"),
                    &format!("a{a}"),
                    i * crate::corpus::SECONDS_PER_WEEK,
                    &["u"],
                ));
            }
        }
        let corpus = Corpus::from_documents(docs, Granularity::Week, Some(0)).unwrap();
        let q = quintile_cutoffs(&corpus, 10).unwrap();
        let words = [BurstyWord {
            word: "u".into(),
            start_bucket: 0,
            end_bucket: 4,
        }];
        let any: LifeStageTable<f64> = life_stage_usage(&corpus, &q, &words, 5, UsageWindow::Anytime).unwrap();
        let burst: LifeStageTable<f64> = life_stage_usage(&corpus, &q, &words, 5, UsageWindow::Burst).unwrap();
        assert!(any.rows.iter().all(|r| r.avg_bursty_words == 1.0));
        assert!(burst
            .rows
            .iter()
            .all(|r| r.avg_bursty_words == if r.stage == 0 { 1.0 } else { 0.0 }));
    }

    #[test]
    fn empty_bursty_set_is_an_error() {
        let corpus = population(&[10; 5]);
        let q = quintile_cutoffs(&corpus, 10).unwrap();
        assert_eq!(
            life_stage_usage::<f64>(&corpus, &q, &[], 5, UsageWindow::Anytime),
            Err(LifecycleError::NoBurstyWords)
        );
    }

    proptest! {
        #[test]
        fn mass_balance(acts in prop::collection::vec(1u64..80, 5..60)) {
            let corpus = population(&acts);
            match quintile_cutoffs(&corpus, 10) {
                Ok(q) => {
                    let total = q.retained_total as f64;
                    for m in q.document_mass {
                        prop_assert!((m as f64 - total / 5.0).abs() <= q.max_activity as f64);
                    }
                    prop_assert_eq!(q.document_mass.iter().sum::<u64>(), q.retained_total);
                    prop_assert!(q.cutoffs.windows(2).all(|w| w[0] <= w[1]));
                }
                Err(LifecycleError::TooFewAuthors { retained, .. }) => prop_assert!(retained < 5),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
