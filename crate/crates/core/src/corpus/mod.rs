//! Documents, time buckets, tokenization and per-word frequency series.
//!
//! A [`Corpus`] is immutable once built. Besides the documents it carries an
//! interned vocabulary with posting lists, so per-word series are computed
//! without rescanning token strings.

mod ingest;
mod time;
mod tokenize;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

pub use ingest::{ingest, read_jsonl, IngestOptions, Schema};
pub use time::{bucket_start_date, parse_iso8601, parse_timestamp, time_bucket, Granularity, SECONDS_PER_WEEK};
pub use tokenize::{read_stopwords, tokenize, NgramMode, TokenizerConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("record {record}: {reason}")]
    MalformedRecord { record: String, reason: String },
    #[error("duplicate doc_id '{0}'")]
    DuplicateDocId(String),
    #[error("input contains no records")]
    EmptyInput,
    #[error("document '{0}' has no authors")]
    NoAuthors(String),
    #[error("timestamp {timestamp} precedes the corpus epoch {epoch}")]
    BeforeEpoch { timestamp: i64, epoch: i64 },
    #[error("timestamp {0} is outside the supported range")]
    TimestampOutOfRange(i64),
    #[error("line {line}: invalid JSON: {reason}")]
    InvalidJson { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Free-form tag distinguishing thread starters from replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Post,
    Comment,
    Other,
}

impl DocKind {
    pub fn parse(s: &str) -> DocKind {
        match s.trim().to_ascii_lowercase().as_str() {
            "post" | "submission" => DocKind::Post,
            "comment" | "reply" => DocKind::Comment,
            _ => DocKind::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub author_ids: Vec<String>,
    pub timestamp: i64,
    pub tokens: Vec<String>,
    pub producer_id: Option<String>,
    pub kind: Option<DocKind>,
}

/// Interned token identifier, an index into [`Corpus::vocabulary`].
pub type TermId = u32;

/// `(n_i, k_i)` for one bucket: documents in the bucket and documents
/// containing the word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BucketCount {
    pub docs: u64,
    pub hits: u64,
}

/// Presence-based usage of one word across all buckets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencySeries {
    pub counts: Vec<BucketCount>,
}

impl FrequencySeries {
    pub fn total_docs(&self) -> u64 {
        self.counts.iter().map(|c| c.docs).sum()
    }

    pub fn total_hits(&self) -> u64 {
        self.counts.iter().map(|c| c.hits).sum()
    }

    /// Fraction of documents containing the word, `Σk_i / Σn_i`.
    pub fn alpha<R: Real>(&self) -> R {
        let n = self.total_docs();
        if n == 0 {
            return R::zero();
        }
        R::from_count(self.total_hits()) / R::from_count(n)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Hits summed over the inclusive bucket range.
    pub fn hits_in(&self, start: usize, end: usize) -> u64 {
        self.counts[start..=end].iter().map(|c| c.hits).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct CorpusData {
    documents: Vec<Document>,
    granularity: Granularity,
    epoch: i64,
}

/// Time-sorted, immutable document collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    granularity: Granularity,
    epoch: i64,
    doc_buckets: Vec<u32>,
    bucket_doc_counts: Vec<u64>,
    vocabulary: Vec<String>,
    term_lookup: HashMap<String, TermId>,
    doc_terms: Vec<Vec<TermId>>,
    postings: Vec<Vec<u32>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.documents == other.documents && self.granularity == other.granularity && self.epoch == other.epoch
    }
}

impl Corpus {
    /// Builds a corpus from already tokenized documents.
    ///
    /// Documents are sorted by `(timestamp, doc_id)`, so the result does not
    /// depend on input order. When `epoch` is `None` the earliest timestamp is
    /// used.
    pub fn from_documents(
        mut documents: Vec<Document>,
        granularity: Granularity,
        epoch: Option<i64>,
    ) -> Result<Self, CorpusError> {
        if documents.is_empty() {
            return Err(CorpusError::EmptyInput);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.author_ids.is_empty() {
                return Err(CorpusError::NoAuthors(doc.doc_id.clone()));
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(CorpusError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        documents.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.doc_id.cmp(&b.doc_id)));
        let epoch = epoch.unwrap_or(documents[0].timestamp);

        let doc_buckets = documents
            .iter()
            .map(|d| time_bucket(d.timestamp, granularity, epoch))
            .collect::<Result<Vec<_>, _>>()?;
        let num_buckets = doc_buckets.iter().copied().max().unwrap_or(0) as usize + 1;
        let mut bucket_doc_counts = vec![0u64; num_buckets];
        for &b in &doc_buckets {
            bucket_doc_counts[b as usize] += 1;
        }

        let mut vocabulary = Vec::new();
        let mut term_lookup: HashMap<String, TermId> = HashMap::new();
        let mut doc_terms = Vec::with_capacity(documents.len());
        let mut postings: Vec<Vec<u32>> = Vec::new();
        for (idx, doc) in documents.iter().enumerate() {
            let mut terms: Vec<TermId> = doc
                .tokens
                .iter()
                .map(|tok| {
                    if let Some(&id) = term_lookup.get(tok) {
                        return id;
                    }
                    let id = vocabulary.len() as TermId;
                    vocabulary.push(tok.clone());
                    term_lookup.insert(tok.clone(), id);
                    postings.push(Vec::new());
                    id
                })
                .collect();
            terms.sort_unstable();
            terms.dedup();
            for &t in &terms {
                postings[t as usize].push(idx as u32);
            }
            doc_terms.push(terms);
        }

        Ok(Self {
            documents,
            granularity,
            epoch,
            doc_buckets,
            bucket_doc_counts,
            vocabulary,
            term_lookup,
            doc_terms,
            postings,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn epoch(&self) -> i64 {
        self.epoch
    }

    /// `n_i` for every bucket from 0 to the last occupied bucket.
    pub fn bucket_doc_counts(&self) -> &[u64] {
        &self.bucket_doc_counts
    }

    pub fn num_buckets(&self) -> usize {
        self.bucket_doc_counts.len()
    }

    /// Bucket index of the document at position `doc` in time order.
    pub fn bucket_of(&self, doc: usize) -> u32 {
        self.doc_buckets[doc]
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn term_id(&self, word: &str) -> Option<TermId> {
        self.term_lookup.get(word).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocabulary[id as usize]
    }

    /// Distinct terms of a document, sorted by id.
    pub fn doc_terms(&self, doc: usize) -> &[TermId] {
        &self.doc_terms[doc]
    }

    pub fn doc_contains(&self, doc: usize, term: TermId) -> bool {
        self.doc_terms[doc].binary_search(&term).is_ok()
    }

    /// Positions (in time order) of documents containing the term.
    pub fn postings(&self, term: TermId) -> &[u32] {
        &self.postings[term as usize]
    }

    pub fn term_series(&self, term: TermId) -> FrequencySeries {
        let mut counts: Vec<BucketCount> = self
            .bucket_doc_counts
            .iter()
            .map(|&docs| BucketCount { docs, hits: 0 })
            .collect();
        for &doc in self.postings(term) {
            counts[self.doc_buckets[doc as usize] as usize].hits += 1;
        }
        FrequencySeries { counts }
    }

    /// Per-bucket `(n_i, k_i)` for `word`. An unknown word yields all-zero hits.
    pub fn word_frequency_series(&self, word: &str) -> FrequencySeries {
        match self.term_id(word) {
            Some(id) => self.term_series(id),
            None => FrequencySeries {
                counts: self
                    .bucket_doc_counts
                    .iter()
                    .map(|&docs| BucketCount { docs, hits: 0 })
                    .collect(),
            },
        }
    }

    /// Serializes the documents and bucketing metadata as JSON.
    pub fn to_json_writer<W: std::io::Write>(&self, writer: W) -> serde_json::Result<()> {
        let data = CorpusDataRef {
            documents: &self.documents,
            granularity: self.granularity,
            epoch: self.epoch,
        };
        serde_json::to_writer(writer, &data)
    }

    pub fn from_json_reader<R: std::io::Read>(reader: R) -> Result<Self, CorpusError> {
        let data: CorpusData = serde_json::from_reader(reader).map_err(|e| CorpusError::InvalidJson {
            line: e.line(),
            reason: e.to_string(),
        })?;
        Self::from_documents(data.documents, data.granularity, Some(data.epoch))
    }
}

#[derive(Serialize)]
struct CorpusDataRef<'a> {
    documents: &'a [Document],
    granularity: Granularity,
    epoch: i64,
}
