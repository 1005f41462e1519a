use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::activity::ActivityIndex;
use crate::corpus::Corpus;
use crate::num::Real;

/// A trending word and the bucket where its burst starts (relative time 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trend {
    pub word: String,
    pub start_bucket: u32,
}

impl Trend {
    pub fn new(word: impl Into<String>, start_bucket: u32) -> Self {
        Self {
            word: word.into(),
            start_bucket,
        }
    }
}

/// Entries sharing a (possibly merged) range of relative times.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeTimeBucket<R> {
    pub rel_start: i64,
    /// Inclusive.
    pub rel_end: i64,
    /// One value per (document, trending word) pair.
    pub entries: Vec<R>,
    /// Still below the threshold after all merging.
    pub residual: bool,
}

impl<R> RelativeTimeBucket<R> {
    pub fn count(&self) -> usize {
        self.entries.len()
    }

    fn absorb(&mut self, later: RelativeTimeBucket<R>) {
        self.rel_end = later.rel_end;
        self.entries.extend(later.entries);
    }
}

/// Places one entry per (population document, contained trending word) at
/// relative time `bucket(doc) - start_bucket`, then merges sparse buckets.
///
/// `values` is aligned with `index.population()` (final activity or
/// fractional rank). Only non-empty relative times form initial buckets.
pub fn assemble_relative_buckets<R: Real>(
    corpus: &Corpus,
    index: &ActivityIndex<R>,
    trends: &[Trend],
    values: &[R],
    threshold: usize,
) -> Vec<RelativeTimeBucket<R>> {
    assert_eq!(
        values.len(),
        index.population().len(),
        "one value per population document"
    );
    let mut by_time: BTreeMap<i64, Vec<R>> = BTreeMap::new();
    for trend in trends {
        let Some(term) = corpus.term_id(&trend.word) else {
            continue;
        };
        for &doc in corpus.postings(term) {
            if let Some(slot) = index.slot(doc as usize) {
                let rel = corpus.bucket_of(doc as usize) as i64 - trend.start_bucket as i64;
                by_time.entry(rel).or_default().push(values[slot]);
            }
        }
    }
    let initial = by_time
        .into_iter()
        .map(|(rel, entries)| RelativeTimeBucket {
            rel_start: rel,
            rel_end: rel,
            entries,
            residual: false,
        })
        .collect();
    merge_relative_buckets(initial, threshold)
}

/// Merges adjacent buckets that are both below `threshold`, scanning from
/// earlier to later.
///
/// A run that is still below the threshold is folded into the following
/// bucket, or into the preceding one when it is the last. The only bucket
/// that can remain below the threshold is a lone one, which is flagged
/// `residual`. Entry counts are conserved.
pub fn merge_relative_buckets<R>(buckets: Vec<RelativeTimeBucket<R>>, threshold: usize) -> Vec<RelativeTimeBucket<R>> {
    let mut runs: Vec<RelativeTimeBucket<R>> = Vec::new();
    let mut iter = buckets.into_iter().peekable();
    while let Some(mut run) = iter.next() {
        while run.count() < threshold {
            match iter.peek() {
                Some(next) if next.count() < threshold => run.absorb(iter.next().expect("peeked")),
                _ => break,
            }
        }
        runs.push(run);
    }

    let mut merged: Vec<RelativeTimeBucket<R>> = Vec::with_capacity(runs.len());
    let mut pending: Option<RelativeTimeBucket<R>> = None;
    for run in runs {
        let run = match pending.take() {
            Some(mut small) => {
                small.absorb(run);
                small
            }
            None => run,
        };
        if run.count() < threshold {
            pending = Some(run);
        } else {
            merged.push(run);
        }
    }
    if let Some(mut small) = pending {
        match merged.last_mut() {
            Some(prev) => prev.absorb(small),
            None => {
                small.residual = small.count() < threshold;
                merged.push(small);
            }
        }
    }
    merged
}
