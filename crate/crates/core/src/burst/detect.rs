use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::automaton::{decode, high_runs, run_weight, AutomatonParams, LogModel};
use super::BurstError;
use crate::corpus::{BucketCount, Corpus, FrequencySeries, Granularity, TermId};
use crate::num::Real;

pub const DEFAULT_TRANSITION: f64 = 0.1;
pub const DEFAULT_TOP_K: usize = 500;
pub const DEFAULT_TARGET_MEDIAN: u64 = 5000;

/// The selected (highest-weight) burst of one word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstInterval<R> {
    pub word: String,
    pub start_bucket: u32,
    /// Inclusive.
    pub end_bucket: u32,
    /// Log-likelihood gain in nats.
    pub weight: R,
    /// Documents containing the word inside the interval.
    pub occurrences: u64,
    pub alpha: R,
}

impl<R> BurstInterval<R> {
    pub fn len(&self) -> u32 {
        self.end_bucket - self.start_bucket + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFilterConfig<R> {
    pub transition: R,
    /// Shortest accepted burst, in buckets.
    pub min_burst_len: u32,
    /// Buckets per longevity window (a quarter of a year).
    pub longevity_window: u32,
    /// Windows checked on each side of the burst start.
    pub longevity_quarters: u32,
    pub top_k: usize,
    pub target_median_occurrences: u64,
    /// Candidate multipliers, strictly increasing and all above 1.
    pub multiplier_grid: Vec<R>,
}

impl<R: Real> TrendFilterConfig<R> {
    /// Defaults scaled to the bucket width: eight weeks minimum length and
    /// quarterly presence for a year on either side. Yearly data uses a
    /// three-year minimum with one one-year window per side.
    pub fn for_granularity(granularity: Granularity) -> Self {
        let (min_burst_len, longevity_window, longevity_quarters) = match granularity {
            Granularity::Week => (8, 13, 4),
            Granularity::Month => (2, 3, 4),
            Granularity::Year => (3, 1, 1),
        };
        Self {
            transition: R::from_f64_lossy(DEFAULT_TRANSITION),
            min_burst_len,
            longevity_window,
            longevity_quarters,
            top_k: DEFAULT_TOP_K,
            target_median_occurrences: DEFAULT_TARGET_MEDIAN,
            multiplier_grid: Self::default_grid(),
        }
    }

    /// 1.5, 2.0, ..., 10.0
    pub fn default_grid() -> Vec<R> {
        (3..=20).map(|i| R::from_f64_lossy(i as f64 * 0.5)).collect()
    }

    pub fn validate(&self) -> Result<(), BurstError> {
        let bad = |msg: &str| Err(BurstError::InvalidConfig(msg.to_string()));
        if self.min_burst_len == 0 || self.longevity_window == 0 || self.top_k == 0 {
            return bad("counts must be positive");
        }
        if self.multiplier_grid.is_empty() {
            return bad("multiplier grid is empty");
        }
        if self.multiplier_grid.iter().any(|&c| !(c > R::one())) {
            return bad("every multiplier must exceed 1");
        }
        if self.multiplier_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("multiplier grid must be strictly increasing");
        }
        if !(self.transition > R::zero() && self.transition < R::one()) {
            return bad("transition probability must lie in (0, 1)");
        }
        Ok(())
    }
}

impl<R: Real> Default for TrendFilterConfig<R> {
    fn default() -> Self {
        Self::for_granularity(Granularity::Week)
    }
}

/// Highest-weight burst of a series, or `None` when the word never enters
/// the high state or its high rate would not be a probability.
pub fn extract_from_series<R: Real>(
    word: &str,
    series: &FrequencySeries,
    multiplier: R,
    transition: R,
) -> Result<Option<BurstInterval<R>>, BurstError> {
    let alpha: R = series.alpha();
    if !(alpha > R::zero()) || !(multiplier * alpha < R::one()) {
        return Ok(None);
    }
    let params = AutomatonParams::new(transition, multiplier, alpha)?;
    let model = LogModel::new(&params)?;
    Ok(best_burst(word, &series.counts, alpha, &model))
}

fn best_burst<R: Real>(word: &str, counts: &[BucketCount], alpha: R, model: &LogModel<R>) -> Option<BurstInterval<R>> {
    let path = decode(counts, model);
    let mut best: Option<((usize, usize), R)> = None;
    for run in high_runs(&path) {
        let w = run_weight(counts, run, model);
        // strict comparison keeps the earliest run on ties
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((run, w));
        }
    }
    best.map(|((start, end), weight)| BurstInterval {
        word: word.to_string(),
        start_bucket: start as u32,
        end_bucket: end as u32,
        weight,
        occurrences: counts[start..=end].iter().map(|c| c.hits).sum(),
        alpha,
    })
}

pub fn extract_bursts<R: Real>(
    corpus: &Corpus,
    word: &str,
    multiplier: R,
    transition: R,
) -> Result<Option<BurstInterval<R>>, BurstError> {
    extract_from_series(word, &corpus.word_frequency_series(word), multiplier, transition)
}

/// Selected burst for every vocabulary word that has one, in term-id order.
///
/// Words are processed with rayon; the output order is fixed by the
/// vocabulary, so it does not depend on the thread count.
pub fn detect_all<R: Real>(corpus: &Corpus, multiplier: R, transition: R) -> Result<Vec<BurstInterval<R>>, BurstError> {
    let found: Vec<Option<BurstInterval<R>>> = (0..corpus.vocabulary().len() as TermId)
        .into_par_iter()
        .map(|term| {
            let series = corpus.term_series(term);
            extract_from_series(corpus.term(term), &series, multiplier, transition)
        })
        .collect::<Result<_, _>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<R> {
    pub multiplier: R,
    pub bursting_words: usize,
    /// Lower median of per-word burst occurrences; `None` when no word bursts.
    pub median_occurrences: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<R> {
    pub multiplier: R,
    /// False when no grid value reached the target and the smallest was used.
    pub satisfied: bool,
    pub grid: Vec<GridPoint<R>>,
    /// Bursts detected at the chosen multiplier.
    pub bursts: Vec<BurstInterval<R>>,
}

pub(crate) fn lower_median(values: &mut [u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable(mid);
    Some(*m)
}

/// Picks the largest grid multiplier whose median burst occurrence count
/// reaches the target.
pub fn calibrate_multiplier<R: Real>(
    corpus: &Corpus,
    config: &TrendFilterConfig<R>,
) -> Result<Calibration<R>, BurstError> {
    config.validate()?;
    if corpus.vocabulary().is_empty() {
        return Err(BurstError::EmptyVocabulary);
    }
    let mut grid = Vec::with_capacity(config.multiplier_grid.len());
    let mut chosen: Option<(R, Vec<BurstInterval<R>>)> = None;
    let mut fallback = None;
    for (i, &c) in config.multiplier_grid.iter().enumerate() {
        let bursts = detect_all(corpus, c, config.transition)?;
        let mut occ: Vec<u64> = bursts.iter().map(|b| b.occurrences).collect();
        let median = lower_median(&mut occ);
        grid.push(GridPoint {
            multiplier: c,
            bursting_words: bursts.len(),
            median_occurrences: median,
        });
        if median.is_some_and(|m| m >= config.target_median_occurrences) {
            chosen = Some((c, bursts));
        } else if i == 0 {
            fallback = Some(bursts);
        }
    }
    let (multiplier, bursts, satisfied) = match chosen {
        Some((c, b)) => (c, b, true),
        None => (
            config.multiplier_grid[0],
            fallback.expect("first grid value always recorded"),
            false,
        ),
    };
    Ok(Calibration {
        multiplier,
        satisfied,
        grid,
        bursts,
    })
}

/// Presence test on quarterly windows around `start`.
///
/// Windows are `[start - j*w, start - (j-1)*w - 1]` before and
/// `[start + (j-1)*w, start + j*w - 1]` after, for `j = 1..=quarters`. Only
/// windows lying fully inside the series are checked; each must contain
/// at least one hit.
pub fn passes_longevity(series: &FrequencySeries, start: u32, window: u32, quarters: u32) -> bool {
    let len = series.len() as i64;
    let (start, w) = (start as i64, window as i64);
    let has_hit = |lo: i64, hi: i64| -> bool {
        if lo < 0 || hi >= len {
            return true;
        }
        series.hits_in(lo as usize, hi as usize) > 0
    };
    (1..=quarters as i64)
        .all(|j| has_hit(start - j * w, start - (j - 1) * w - 1) && has_hit(start + (j - 1) * w, start + j * w - 1))
}

/// Applies the length and longevity filters, sorts by descending weight
/// (ties by word) and keeps the top `top_k`.
pub fn filter_and_rank<R: Real, I>(corpus: &Corpus, bursts: I, config: &TrendFilterConfig<R>) -> Vec<BurstInterval<R>>
where
    I: IntoIterator<Item = BurstInterval<R>>,
{
    let mut kept: Vec<BurstInterval<R>> = bursts
        .into_iter()
        .filter(|b| b.len() >= config.min_burst_len)
        .filter(|b| {
            let series = corpus.word_frequency_series(&b.word);
            passes_longevity(
                &series,
                b.start_bucket,
                config.longevity_window,
                config.longevity_quarters,
            )
        })
        .collect();
    kept.sort_by(|a, b| b.weight.cmp_total(&a.weight).then_with(|| a.word.cmp(&b.word)));
    kept.truncate(config.top_k);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, SECONDS_PER_WEEK};

    fn series(pairs: &[(u64, u64)]) -> FrequencySeries {
        FrequencySeries {
            counts: pairs.iter().map(|&(docs, hits)| BucketCount { docs, hits }).collect(),
        }
    }

    /// Corpus where each word's weekly hit counts are given explicitly,
    /// with `docs_per_week` documents in every week.
    fn corpus_from_hits(weeks: usize, docs_per_week: usize, words: &[(&str, Vec<usize>)]) -> Corpus {
        let mut docs = Vec::new();
        for week in 0..weeks {
            for i in 0..docs_per_week {
                let tokens = words
                    .iter()
                    .filter(|(_, hits)| i < hits[week])
                    .map(|(w, _)| w.to_string())
                    .collect();
                docs.push(Document {
                    doc_id: format!("{week}-{i}"),
                    author_ids: vec![format!("a{}", i % 7)],
                    timestamp: week as i64 * SECONDS_PER_WEEK + i as i64,
                    tokens,
                    producer_id: None,
                    kind: None,
                });
            }
        }
        Corpus::from_documents(docs, Granularity::Week, Some(0)).unwrap()
    }

    #[test]
    fn flat_word_has_no_burst() {
        let s = series(&[(1000, 10); 30]);
        assert_eq!(extract_from_series("w", &s, 3.0, 0.1).unwrap(), None);
    }

    #[test]
    fn planted_interval_is_selected() {
        let mut pairs = vec![(1000, 10); 40];
        for p in &mut pairs[12..24] {
            p.1 = 50;
        }
        let b = extract_from_series("w", &series(&pairs), 3.0, 0.1).unwrap().unwrap();
        assert_eq!((b.start_bucket, b.end_bucket), (12, 23));
        assert_eq!(b.occurrences, 600);
        assert!(b.weight > 0.0);
    }

    #[test]
    fn heaviest_run_wins() {
        // A short weak run and a longer strong one: the strong one is kept
        // even though it comes later.
        let mut pairs = vec![(1000, 10); 40];
        for p in &mut pairs[5..9] {
            p.1 = 40;
        }
        for p in &mut pairs[25..35] {
            p.1 = 45;
        }
        let s = series(&pairs);
        let alpha: f64 = s.alpha();
        let params = AutomatonParams::new(0.1, 2.0, alpha).unwrap();
        let path = crate::burst::viterbi_states(&s.counts, &params).unwrap();
        assert_eq!(high_runs(&path), vec![(5, 8), (25, 34)]);
        let b = extract_from_series("w", &s, 2.0, 0.1).unwrap().unwrap();
        assert_eq!(b.start_bucket, 25);
    }

    #[test]
    fn frequent_word_is_skipped() {
        let s = series(&[(10, 6); 5]);
        assert_eq!(extract_from_series("w", &s, 2.0, 0.1).unwrap(), None);
    }

    #[test]
    fn calibration_picks_largest_satisfying_multiplier() {
        // occurrence medians fall as c grows: find it via the grid and compare
        // against a direct recomputation.
        let mut hits = vec![5usize; 60];
        for h in &mut hits[20..40] {
            *h = 25;
        }
        let mut hits2 = vec![3usize; 60];
        for h in &mut hits2[30..34] {
            *h = 40;
        }
        let corpus = corpus_from_hits(60, 400, &[("alpha", hits), ("beta", hits2)]);
        let mut config = TrendFilterConfig::<f64> {
            multiplier_grid: vec![1.5, 3.0, 6.0, 12.0],
            ..Default::default()
        };
        let recompute = |c: f64| -> Option<u64> {
            let mut occ: Vec<u64> = corpus
                .vocabulary()
                .iter()
                .filter_map(|w| extract_bursts(&corpus, w, c, 0.1).unwrap())
                .map(|b| b.occurrences)
                .collect();
            occ.sort();
            (!occ.is_empty()).then(|| occ[(occ.len() - 1) / 2])
        };
        let medians: Vec<_> = config.multiplier_grid.iter().map(|&c| recompute(c)).collect();
        let target = medians.iter().flatten().copied().min().unwrap();
        config.target_median_occurrences = target;
        let cal = calibrate_multiplier(&corpus, &config).unwrap();
        let expected = config
            .multiplier_grid
            .iter()
            .zip(&medians)
            .filter(|(_, m)| m.is_some_and(|m| m >= target))
            .map(|(&c, _)| c)
            .fold(f64::NAN, f64::max);
        assert!(cal.satisfied);
        assert_eq!(cal.multiplier, expected);
        let got: Vec<_> = cal.grid.iter().map(|g| g.median_occurrences).collect();
        assert_eq!(got, medians);
    }

    #[test]
    fn calibration_fallback_flags_unsatisfied() {
        let mut hits = vec![2usize; 30];
        for h in &mut hits[10..20] {
            *h = 12;
        }
        let corpus = corpus_from_hits(30, 200, &[("w", hits)]);
        let config = TrendFilterConfig::<f64> {
            multiplier_grid: vec![2.0, 4.0, 8.0],
            target_median_occurrences: 1_000_000,
            ..Default::default()
        };
        let cal = calibrate_multiplier(&corpus, &config).unwrap();
        assert!(!cal.satisfied);
        assert_eq!(cal.multiplier, 2.0);
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let corpus = corpus_from_hits(2, 2, &[("w", vec![1, 1])]);
        let mut config = TrendFilterConfig::<f64> {
            multiplier_grid: vec![2.0, 2.0],
            ..Default::default()
        };
        assert!(matches!(
            calibrate_multiplier(&corpus, &config),
            Err(BurstError::InvalidConfig(_))
        ));
        config.multiplier_grid = vec![];
        assert!(calibrate_multiplier(&corpus, &config).is_err());
    }

    fn interval(word: &str, start: u32, end: u32, weight: f64) -> BurstInterval<f64> {
        BurstInterval {
            word: word.into(),
            start_bucket: start,
            end_bucket: end,
            weight,
            occurrences: 1,
            alpha: 0.1,
        }
    }

    #[test]
    fn short_bursts_are_dropped() {
        let corpus = corpus_from_hits(20, 2, &[("w", vec![1; 20])]);
        let cfg = TrendFilterConfig::<f64>::default();
        let out = filter_and_rank(&corpus, vec![interval("w", 3, 7, 5.0)], &cfg);
        assert!(out.is_empty());
        let out = filter_and_rank(&corpus, vec![interval("w", 3, 10, 5.0)], &cfg);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn longevity_requires_presence_before_start() {
        // 120 weeks, burst starts at 60: the word is missing in [47, 59].
        let mut hits = vec![1usize; 120];
        for h in &mut hits[47..60] {
            *h = 0;
        }
        let corpus = corpus_from_hits(120, 2, &[("gap", hits), ("ok", vec![1; 120])]);
        let cfg = TrendFilterConfig::<f64>::default();
        let out = filter_and_rank(
            &corpus,
            vec![interval("gap", 60, 70, 9.0), interval("ok", 60, 70, 1.0)],
            &cfg,
        );
        let words: Vec<_> = out.iter().map(|b| b.word.as_str()).collect();
        assert_eq!(words, ["ok"]);
    }

    #[test]
    fn windows_past_the_boundary_are_ignored() {
        let s = series(&[(2, 1); 10]);
        assert!(passes_longevity(&s, 2, 13, 4));
        let mut gappy = vec![(2, 1); 40];
        gappy[0] = (2, 0);
        assert!(passes_longevity(&series(&gappy), 14, 13, 4));
        // [1, 13] is inside and has hits; [0..] window not fully inside for j=2
        gappy[1..14].iter_mut().for_each(|p| p.1 = 0);
        assert!(!passes_longevity(&series(&gappy), 14, 13, 4));
    }

    #[test]
    fn rank_truncates_to_top_k() {
        let words: Vec<String> = (0..600).map(|i| format!("w{i:03}")).collect();
        let spec: Vec<(&str, Vec<usize>)> = words.iter().map(|w| (w.as_str(), vec![1; 20])).collect();
        let corpus = corpus_from_hits(20, 1, &spec);
        let bursts: Vec<_> = words
            .iter()
            .enumerate()
            .map(|(i, w)| interval(w, 2, 12, (i % 250) as f64))
            .collect();
        let out = filter_and_rank(&corpus, bursts, &TrendFilterConfig::<f64>::default());
        assert_eq!(out.len(), 500);
        assert!(out
            .windows(2)
            .all(|p| p[0].weight > p[1].weight || (p[0].weight == p[1].weight && p[0].word < p[1].word)));
        assert_eq!(out[0].weight, 249.0);
    }

    #[test]
    fn default_grid_shape() {
        let g = TrendFilterConfig::<f64>::default_grid();
        assert_eq!(g.first(), Some(&1.5));
        assert_eq!(g.last(), Some(&10.0));
        assert_eq!(g.len(), 18);
        assert!(TrendFilterConfig::<f64>::default().validate().is_ok());
    }
}
