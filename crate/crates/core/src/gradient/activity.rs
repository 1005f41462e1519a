use std::collections::{BTreeMap, HashMap};

use super::{ActivityScope, GradientError, PopulationKey, Subset};
use crate::corpus::{Corpus, DocKind, Document};
use crate::num::Real;

use super::ecdf::Ecdf;

fn in_subset(doc: &Document, subset: Subset) -> bool {
    match subset {
        Subset::All => true,
        Subset::Post => doc.kind == Some(DocKind::Post),
        Subset::Comment => doc.kind == Some(DocKind::Comment),
    }
}

fn keys_of(doc: &Document, key: PopulationKey) -> &[String] {
    match key {
        PopulationKey::Author => &doc.author_ids,
        PopulationKey::Producer => doc.producer_id.as_slice(),
    }
}

/// Activity levels for one population of documents.
///
/// The population is the set of documents in the chosen subset that carry
/// the population key. Per-document values are aligned with
/// [`ActivityIndex::population`]. A document with several keys (co-authored
/// papers) counts toward each key and takes the largest of their levels.
#[derive(Debug, Clone)]
pub struct ActivityIndex<R> {
    population_key: PopulationKey,
    subset: Subset,
    population: Vec<usize>,
    slot_of: Vec<Option<u32>>,
    keys: Vec<String>,
    final_activity: Vec<u64>,
    final_doc_activity: Vec<u64>,
    current_doc_activity: Vec<u64>,
    cdf: Ecdf<R>,
}

impl<R: Real> ActivityIndex<R> {
    pub fn build(
        corpus: &Corpus,
        population_key: PopulationKey,
        subset: Subset,
        scope: ActivityScope,
    ) -> Result<Self, GradientError> {
        let docs = corpus.documents();
        if subset != Subset::All && docs.iter().all(|d| d.kind.is_none()) {
            return Err(GradientError::MissingField("kind"));
        }
        if population_key == PopulationKey::Producer && docs.iter().all(|d| d.producer_id.is_none()) {
            return Err(GradientError::MissingField("producer"));
        }

        let has_key = |d: &Document| !keys_of(d, population_key).is_empty();
        let counted: Vec<usize> = (0..docs.len())
            .filter(|&i| {
                let d = &docs[i];
                has_key(d) && (scope == ActivityScope::AllDocuments || in_subset(d, subset))
            })
            .collect();
        let population: Vec<usize> = counted
            .iter()
            .copied()
            .filter(|&i| in_subset(&docs[i], subset))
            .collect();
        if population.is_empty() {
            return Err(GradientError::EmptyPopulation { subset, population_key });
        }
        let mut slot_of = vec![None; docs.len()];
        for (slot, &doc) in population.iter().enumerate() {
            slot_of[doc] = Some(slot as u32);
        }

        let mut key_ids: HashMap<&str, usize> = HashMap::new();
        let mut keys: Vec<String> = Vec::new();
        let doc_key_ids: Vec<Vec<usize>> = counted
            .iter()
            .map(|&i| {
                keys_of(&docs[i], population_key)
                    .iter()
                    .map(|k| {
                        *key_ids.entry(k.as_str()).or_insert_with(|| {
                            keys.push(k.clone());
                            keys.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();

        let mut final_activity = vec![0u64; keys.len()];
        for ids in &doc_key_ids {
            for &k in ids {
                final_activity[k] += 1;
            }
        }

        // Running counts, advanced a whole timestamp group at a time so that
        // documents sharing a timestamp see each other.
        let mut running = vec![0u64; keys.len()];
        let mut current_doc_activity = vec![0u64; population.len()];
        let mut final_doc_activity = vec![0u64; population.len()];
        let mut group_start = 0;
        while group_start < counted.len() {
            let ts = docs[counted[group_start]].timestamp;
            let mut group_end = group_start;
            while group_end < counted.len() && docs[counted[group_end]].timestamp == ts {
                for &k in &doc_key_ids[group_end] {
                    running[k] += 1;
                }
                group_end += 1;
            }
            for pos in group_start..group_end {
                if let Some(slot) = slot_of[counted[pos]] {
                    let ids = &doc_key_ids[pos];
                    current_doc_activity[slot as usize] = ids.iter().map(|&k| running[k]).max().unwrap_or(0);
                    final_doc_activity[slot as usize] = ids.iter().map(|&k| final_activity[k]).max().unwrap_or(0);
                }
            }
            group_start = group_end;
        }

        let cdf = Ecdf::from_counts(&final_doc_activity);
        Ok(Self {
            population_key,
            subset,
            population,
            slot_of,
            keys,
            final_activity,
            final_doc_activity,
            current_doc_activity,
            cdf,
        })
    }

    pub fn population_key(&self) -> PopulationKey {
        self.population_key
    }

    pub fn subset(&self) -> Subset {
        self.subset
    }

    /// Corpus positions of population documents, in time order.
    pub fn population(&self) -> &[usize] {
        &self.population
    }

    /// Position of a corpus document within the population.
    pub fn slot(&self, doc: usize) -> Option<usize> {
        self.slot_of.get(doc).copied().flatten().map(|s| s as usize)
    }

    pub fn final_activity(&self, key: &str) -> Option<u64> {
        self.keys.iter().position(|k| k == key).map(|i| self.final_activity[i])
    }

    pub fn final_activity_map(&self) -> BTreeMap<&str, u64> {
        self.keys
            .iter()
            .map(String::as_str)
            .zip(self.final_activity.iter().copied())
            .collect()
    }

    /// Final activity per population document.
    pub fn final_doc_activity(&self) -> &[u64] {
        &self.final_doc_activity
    }

    /// Current activity per population document.
    pub fn current_doc_activity(&self) -> &[u64] {
        &self.current_doc_activity
    }

    /// `H` over the population's final document activity.
    pub fn cdf(&self) -> &Ecdf<R> {
        &self.cdf
    }

    pub fn activity_cdf(&self, x: R) -> R {
        self.cdf.cdf(x)
    }

    /// Population document values as scalars for the requested mode.
    pub fn final_values(&self) -> Vec<R> {
        self.final_doc_activity.iter().map(|&a| R::from_count(a)).collect()
    }
}

/// Within-bucket quantile of current activity, one value per population
/// document: the fraction of population documents in the same bucket whose
/// current activity is strictly smaller.
pub fn fractional_rank<R: Real>(corpus: &Corpus, index: &ActivityIndex<R>) -> Vec<R> {
    let population = index.population();
    let current = index.current_doc_activity();
    let mut ranks = vec![R::zero(); population.len()];
    let mut start = 0;
    while start < population.len() {
        let bucket = corpus.bucket_of(population[start]);
        let mut end = start;
        while end < population.len() && corpus.bucket_of(population[end]) == bucket {
            end += 1;
        }
        let mut sorted: Vec<u64> = current[start..end].to_vec();
        sorted.sort_unstable();
        let total = R::from_count((end - start) as u64);
        for slot in start..end {
            let smaller = sorted.partition_point(|&a| a < current[slot]);
            ranks[slot] = R::from_count(smaller as u64) / total;
        }
        start = end;
    }
    ranks
}

/// Ranks keyed by document id.
pub fn fractional_rank_map<'c, R: Real>(corpus: &'c Corpus, index: &ActivityIndex<R>) -> HashMap<&'c str, R> {
    let ranks = fractional_rank(corpus, index);
    index
        .population()
        .iter()
        .zip(ranks)
        .map(|(&doc, r)| (corpus.documents()[doc].doc_id.as_str(), r))
        .collect()
}
