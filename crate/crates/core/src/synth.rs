//! Seeded synthetic corpora with planted trends and a ground-truth record.
//!
//! Authors get power-law activity levels and spread their documents
//! uniformly over the time range. Background text is drawn from a Zipf
//! vocabulary. Each planted word is inserted into existing documents at a
//! base rate, raised by a multiplier inside its burst interval; before the
//! burst the documents are drawn from the pool named by the adoption
//! schedule (most active authors, least active, or anyone), afterwards from
//! everyone.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, DocKind, Document, SECONDS_PER_WEEK};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdoptionSchedule {
    Uniform,
    EliteLed,
    PeripheryLed,
}

impl std::str::FromStr for AdoptionSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(AdoptionSchedule::Uniform),
            "elite-led" | "elite" => Ok(AdoptionSchedule::EliteLed),
            "periphery-led" | "periphery" => Ok(AdoptionSchedule::PeripheryLed),
            other => Err(format!("unknown adoption schedule '{other}'")),
        }
    }
}

/// Which documents a planted occurrence may be drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    Any,
    /// Top decile by document mass.
    Elite,
    /// Bottom decile by document mass.
    Periphery,
}

impl AdoptionSchedule {
    fn pool(self, before_onset: bool, sustained: bool) -> Pool {
        if !before_onset && !sustained {
            return Pool::Any;
        }
        match self {
            AdoptionSchedule::Uniform => Pool::Any,
            AdoptionSchedule::EliteLed => Pool::Elite,
            AdoptionSchedule::PeripheryLed => Pool::Periphery,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTrend {
    pub word: String,
    pub start_week: u32,
    /// Inclusive.
    pub end_week: u32,
    /// Fraction of each week's documents carrying the word outside the burst.
    pub base_rate: f64,
    /// Rate multiplier inside `[start_week, end_week]`.
    pub multiplier: f64,
    /// Author pool before the burst; everyone afterwards.
    pub schedule: AdoptionSchedule,
    /// Producer pool, same phase rule as `schedule`.
    #[serde(default)]
    pub producer_schedule: Option<AdoptionSchedule>,
    /// Only plant into documents of this kind.
    #[serde(default)]
    pub kind: Option<DocKind>,
    /// Keep the pre-onset pools after the onset too.
    #[serde(default)]
    pub sustained: bool,
}

impl PlantedTrend {
    pub fn new(word: &str, start_week: u32, end_week: u32, multiplier: f64, schedule: AdoptionSchedule) -> Self {
        Self {
            word: word.to_string(),
            start_week,
            end_week,
            base_rate: 0.01,
            multiplier,
            schedule,
            producer_schedule: None,
            kind: None,
            sustained: false,
        }
    }

    /// Parses `word:start:end:multiplier[:schedule[:base_rate]]`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=6).contains(&parts.len()) {
            return Err(format!(
                "planted trend '{s}' must be word:start:end:multiplier[:schedule[:base_rate]]"
            ));
        }
        let num = |i: usize, what: &str| parts[i].parse::<f64>().map_err(|_| format!("bad {what} in '{s}'"));
        let week = |i: usize, what: &str| parts[i].parse::<u32>().map_err(|_| format!("bad {what} in '{s}'"));
        let mut t = PlantedTrend::new(
            parts[0],
            week(1, "start week")?,
            week(2, "end week")?,
            num(3, "multiplier")?,
            AdoptionSchedule::Uniform,
        );
        if let Some(sched) = parts.get(4) {
            t.schedule = sched.parse()?;
        }
        if parts.len() == 6 {
            t.base_rate = num(5, "base rate")?;
        }
        Ok(t)
    }
}

/// Per-author rate of using a word that changes linearly over the author's
/// own document sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeUsage {
    pub word: String,
    pub start_rate: f64,
    pub end_rate: f64,
}

impl LifeUsage {
    pub fn rate_at(&self, position: usize, history: usize) -> f64 {
        if history <= 1 {
            return self.start_rate;
        }
        let t = position as f64 / (history - 1) as f64;
        self.start_rate + (self.end_rate - self.start_rate) * t
    }

    /// Half-width of a `z`-sigma interval around the mean of `docs`
    /// independent draws at rate `rate`.
    pub fn noise_bound(rate: f64, docs: u64, z: f64) -> f64 {
        z * (rate * (1.0 - rate) / docs.max(1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub authors: usize,
    /// Draw authors until this many documents exist (overrides `authors`).
    pub target_docs: Option<u64>,
    /// Pareto tail exponent of author activity.
    pub activity_exponent: f64,
    pub max_activity: u64,
    pub weeks: u32,
    pub epoch: i64,
    pub vocabulary: usize,
    pub words_per_doc: usize,
    pub zipf_exponent: f64,
    /// Producer count; 0 disables producer ids.
    pub producers: usize,
    pub producer_exponent: f64,
    /// Share of documents tagged `post` (the rest `comment`); `None` leaves kinds unset.
    pub post_fraction: Option<f64>,
    pub trends: Vec<PlantedTrend>,
    pub life_usage: Option<LifeUsage>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            authors: 2000,
            target_docs: None,
            activity_exponent: 1.2,
            max_activity: 2000,
            weeks: 104,
            epoch: 1_262_304_000, // 2010-01-01
            vocabulary: 2000,
            words_per_doc: 8,
            zipf_exponent: 1.0,
            producers: 0,
            producer_exponent: 1.2,
            post_fraction: None,
            trends: Vec::new(),
            life_usage: None,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.weeks == 0 {
            return bad("weeks must be positive".into());
        }
        if self.authors == 0 && self.target_docs.unwrap_or(0) == 0 {
            return bad("need at least one author".into());
        }
        if !(self.activity_exponent > 0.0) || !(self.producer_exponent > 0.0) {
            return bad("power-law exponents must be positive".into());
        }
        if self.max_activity == 0 {
            return bad("max_activity must be positive".into());
        }
        if self.vocabulary == 0 && self.words_per_doc > 0 {
            return bad("background vocabulary is empty".into());
        }
        if let Some(p) = self.post_fraction {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("post_fraction {p} not in [0, 1]"));
            }
        }
        for t in &self.trends {
            if t.word.is_empty() || t.word.chars().any(|c| !c.is_alphanumeric() || c.is_uppercase()) {
                return bad(format!("planted word '{}' must be lowercase alphanumeric", t.word));
            }
            if t.start_week > t.end_week || t.end_week >= self.weeks {
                return bad(format!(
                    "planted interval [{}, {}] for '{}' outside 0..{}",
                    t.start_week, t.end_week, t.word, self.weeks
                ));
            }
            if !(t.base_rate > 0.0) || !(t.multiplier >= 1.0) || t.base_rate * t.multiplier > 1.0 {
                return bad(format!(
                    "rates for '{}' must satisfy 0 < base <= base*multiplier <= 1",
                    t.word
                ));
            }
            if t.producer_schedule.is_some() && self.producers == 0 {
                return bad(format!("'{}' has a producer schedule but producers = 0", t.word));
            }
            if t.kind.is_some() && self.post_fraction.is_none() {
                return bad(format!("'{}' is restricted to a kind but kinds are disabled", t.word));
            }
        }
        if let Some(l) = &self.life_usage {
            if ![l.start_rate, l.end_rate].iter().all(|r| (0.0..=1.0).contains(r)) {
                return bad("life usage rates must lie in [0, 1]".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDoc {
    pub id: String,
    pub author: usize,
    pub timestamp: i64,
    pub week: u32,
    pub producer: Option<usize>,
    pub kind: Option<DocKind>,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub trend: PlantedTrend,
    /// Documents that received the word, by week.
    pub weekly_hits: Vec<u64>,
    /// Pre-onset occurrences whose author is in the elite pool.
    pub pre_onset_elite_share: Option<f64>,
    /// Weeks where the pool had fewer documents than requested.
    pub shortfall_weeks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SyntheticSpec,
    pub documents: usize,
    pub author_activity: Vec<u64>,
    /// Minimum activity of elite authors.
    pub elite_min_activity: u64,
    /// Maximum activity of periphery authors.
    pub periphery_max_activity: u64,
    pub planted: Vec<PlantedTruth>,
}

impl GroundTruth {
    pub fn author_name(author: usize) -> String {
        format!("u{author:06}")
    }

    pub fn producer_name(producer: usize) -> String {
        format!("p{producer:05}")
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<SyntheticDoc>,
    pub truth: GroundTruth,
}

fn pareto(rng: &mut ChaCha8Rng, exponent: f64, cap: u64) -> u64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.powf(-1.0 / exponent).floor() as u64).clamp(1, cap)
}

/// Elite/periphery flags over keys weighted by their own document counts.
/// A key is elite when keys strictly more active than it hold under 10% of
/// all documents, and peripheral when keys strictly less active do. Ties
/// share a class, so both classes are never empty.
fn classify(activity: &[u64]) -> (Vec<Pool>, u64, u64) {
    let total: u64 = activity.iter().sum();
    let mut sorted: Vec<u64> = activity.iter().copied().filter(|&a| a > 0).collect();
    sorted.sort_unstable();
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0u64);
    for &a in &sorted {
        prefix.push(prefix.last().unwrap() + a);
    }
    let below = |a: u64| prefix[sorted.partition_point(|&x| x < a)];
    let above = |a: u64| total - prefix[sorted.partition_point(|&x| x <= a)];
    let mut elite_min = u64::MAX;
    let mut periphery_max = 0;
    let classes = activity
        .iter()
        .map(|&a| {
            if a == 0 {
                Pool::Any
            } else if above(a) * 10 < total {
                elite_min = elite_min.min(a);
                Pool::Elite
            } else if below(a) * 10 < total {
                periphery_max = periphery_max.max(a);
                Pool::Periphery
            } else {
                Pool::Any
            }
        })
        .collect();
    (classes, elite_min, periphery_max)
}

fn matches(pool: Pool, class: Pool) -> bool {
    pool == Pool::Any || pool == class
}

/// Generates a corpus. The same spec always yields the same output.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut author_activity: Vec<u64> = Vec::new();
    match spec.target_docs {
        Some(target) => {
            let mut total = 0;
            while total < target {
                let a = pareto(&mut rng, spec.activity_exponent, spec.max_activity).min(target - total);
                author_activity.push(a);
                total += a;
            }
        }
        None => {
            for _ in 0..spec.authors {
                author_activity.push(pareto(&mut rng, spec.activity_exponent, spec.max_activity));
            }
        }
    }

    let span = spec.weeks as i64 * SECONDS_PER_WEEK;
    let mut docs: Vec<SyntheticDoc> = Vec::new();
    for (author, &n) in author_activity.iter().enumerate() {
        for _ in 0..n {
            let offset = rng.random_range(0..span);
            docs.push(SyntheticDoc {
                id: String::new(),
                author,
                timestamp: spec.epoch + offset,
                week: (offset / SECONDS_PER_WEEK) as u32,
                producer: None,
                kind: None,
                tokens: Vec::new(),
            });
        }
    }
    docs.sort_by_key(|d| (d.timestamp, d.author));
    for (i, d) in docs.iter_mut().enumerate() {
        d.id = format!("d{i:07}");
    }

    let zipf = if spec.words_per_doc > 0 {
        Some(
            Zipf::new(spec.vocabulary as f64, spec.zipf_exponent)
                .map_err(|e| SynthError::InvalidSpec(format!("zipf: {e}")))?,
        )
    } else {
        None
    };
    let producer_pick = if spec.producers > 0 {
        let weights: Vec<f64> = (0..spec.producers)
            .map(|_| pareto(&mut rng, spec.producer_exponent, 1_000_000) as f64)
            .collect();
        Some(WeightedIndex::new(&weights).map_err(|e| SynthError::InvalidSpec(format!("producers: {e}")))?)
    } else {
        None
    };
    for d in docs.iter_mut() {
        if let Some(z) = &zipf {
            d.tokens = (0..spec.words_per_doc)
                .map(|_| format!("w{}", z.sample(&mut rng) as u64))
                .collect();
        }
        if let Some(p) = &producer_pick {
            d.producer = Some(p.sample(&mut rng));
        }
        if let Some(frac) = spec.post_fraction {
            d.kind = Some(if rng.random::<f64>() < frac {
                DocKind::Post
            } else {
                DocKind::Comment
            });
        }
    }

    let (author_class, elite_min_activity, periphery_max_activity) = classify(&author_activity);
    let producer_class = if spec.producers > 0 {
        let mut counts = vec![0u64; spec.producers];
        for d in &docs {
            counts[d.producer.expect("producers enabled")] += 1;
        }
        classify(&counts).0
    } else {
        Vec::new()
    };

    let mut by_week: Vec<Vec<usize>> = vec![Vec::new(); spec.weeks as usize];
    for (i, d) in docs.iter().enumerate() {
        by_week[d.week as usize].push(i);
    }

    let mut planted = Vec::with_capacity(spec.trends.len());
    for trend in &spec.trends {
        let mut weekly_hits = vec![0u64; spec.weeks as usize];
        let mut shortfall_weeks = Vec::new();
        let (mut pre_total, mut pre_elite) = (0u64, 0u64);
        for week in 0..spec.weeks {
            let week_docs = &by_week[week as usize];
            if week_docs.is_empty() {
                continue;
            }
            let in_burst = (trend.start_week..=trend.end_week).contains(&week);
            let rate = if in_burst {
                trend.base_rate * trend.multiplier
            } else {
                trend.base_rate
            };
            let want = Binomial::new(week_docs.len() as u64, rate)
                .map_err(|e| SynthError::InvalidSpec(format!("binomial: {e}")))?
                .sample(&mut rng) as usize;
            let before_onset = week < trend.start_week;
            let author_pool = trend.schedule.pool(before_onset, trend.sustained);
            let producer_pool = trend
                .producer_schedule
                .map_or(Pool::Any, |s| s.pool(before_onset, trend.sustained));
            let candidates: Vec<usize> = week_docs
                .iter()
                .copied()
                .filter(|&i| {
                    let d = &docs[i];
                    matches(author_pool, author_class[d.author])
                        && d.producer
                            .is_none_or(|p| producer_class.is_empty() || matches(producer_pool, producer_class[p]))
                        && trend.kind.is_none_or(|k| d.kind == Some(k))
                })
                .collect();
            let take = want.min(candidates.len());
            if take < want {
                shortfall_weeks.push(week);
            }
            for pick in sample(&mut rng, candidates.len(), take).into_iter() {
                let doc = &mut docs[candidates[pick]];
                doc.tokens.push(trend.word.clone());
                if before_onset {
                    pre_total += 1;
                    pre_elite += (author_class[doc.author] == Pool::Elite) as u64;
                }
            }
            weekly_hits[week as usize] = take as u64;
        }
        planted.push(PlantedTruth {
            trend: trend.clone(),
            weekly_hits,
            pre_onset_elite_share: (pre_total > 0).then(|| pre_elite as f64 / pre_total as f64),
            shortfall_weeks,
        });
    }

    if let Some(life) = &spec.life_usage {
        let mut position = vec![0usize; author_activity.len()];
        for d in docs.iter_mut() {
            let history = author_activity[d.author] as usize;
            let p = life.rate_at(position[d.author], history);
            position[d.author] += 1;
            if rng.random::<f64>() < p {
                d.tokens.push(life.word.clone());
            }
        }
    }

    let documents = docs.len();
    Ok(SyntheticCorpus {
        docs,
        truth: GroundTruth {
            spec: spec.clone(),
            documents,
            author_activity,
            elite_min_activity,
            periphery_max_activity,
            planted,
        },
    })
}

impl SyntheticCorpus {
    /// Documents ready for [`crate::corpus::Corpus::from_documents`]. Tokens
    /// are already normalized, so this matches ingesting the JSONL output
    /// with an empty stopword list.
    pub fn documents(&self) -> Vec<Document> {
        self.docs
            .iter()
            .map(|d| Document {
                doc_id: d.id.clone(),
                author_ids: vec![GroundTruth::author_name(d.author)],
                timestamp: d.timestamp,
                tokens: d.tokens.clone(),
                producer_id: d.producer.map(GroundTruth::producer_name),
                kind: d.kind,
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SynthError> {
        for d in &self.docs {
            let mut rec = serde_json::Map::new();
            rec.insert("id".into(), d.id.clone().into());
            rec.insert("authors".into(), vec![GroundTruth::author_name(d.author)].into());
            rec.insert("timestamp".into(), d.timestamp.into());
            rec.insert("text".into(), d.tokens.join(" ").into());
            if let Some(p) = d.producer {
                rec.insert("producer".into(), GroundTruth::producer_name(p).into());
            }
            if let Some(k) = d.kind {
                rec.insert("kind".into(), serde_json::to_value(k)?);
            }
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_truth<W: Write>(&self, out: W) -> Result<(), SynthError> {
        serde_json::to_writer_pretty(out, &self.truth)?;
        Ok(())
    }

    /// Whether `author` (as named in the output) belongs to the elite pool.
    pub fn is_elite(&self, author: usize) -> bool {
        self.truth.author_activity[author] >= self.truth.elite_min_activity
    }
}
