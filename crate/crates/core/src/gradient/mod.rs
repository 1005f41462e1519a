//! Status gradients: how the activity of a trend's adopters compares with
//! the activity of the community as a whole, as a function of time relative
//! to the trend's burst.
//!
//! For each relative time the median activity `g` of documents using a
//! trending word is mapped through the empirical CDF `H` of activity over
//! all documents, giving `f = H(g)`. Values above 1/2 mean the most active
//! members are overrepresented; values below mean the periphery is.

mod activity;
mod buckets;
mod ecdf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::num::Real;

pub use activity::{fractional_rank, fractional_rank_map, ActivityIndex};
pub use buckets::{assemble_relative_buckets, merge_relative_buckets, RelativeTimeBucket, Trend};
pub use ecdf::{lower_median, Ecdf};

/// Minimum entries per relative-time bucket after merging.
pub const DEFAULT_THRESHOLD: usize = 1500;

#[derive(Debug, Error, PartialEq)]
pub enum GradientError {
    #[error("corpus has no '{0}' values; required for the requested variant")]
    MissingField(&'static str),
    #[error("no documents in the {subset} subset carry a {population_key} key")]
    EmptyPopulation {
        subset: Subset,
        population_key: PopulationKey,
    },
    #[error("no trending words given")]
    NoTrends,
    #[error("no document in the population contains a trending word")]
    NoEntries,
    #[error("bucket threshold must be at least 1")]
    InvalidThreshold,
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim().to_ascii_lowercase();
                $(if s == $text {
                    return Ok($name::$variant);
                })+
                Err(format!(concat!("unknown ", stringify!($name), " '{}'"), s))
            }
        }
    };
}

keyword_enum!(
    /// Whose activity is measured: the document's authors or its producer
    /// (brand, link domain).
    PopulationKey { Author => "author", Producer => "producer" }
);

keyword_enum!(
    /// Lifetime activity, or within-bucket fractional rank of activity so far.
    ActivityMode { Final => "final", Current => "current" }
);

keyword_enum!(
    Subset { All => "all", Post => "post", Comment => "comment" }
);

keyword_enum!(
    /// Which documents activity is counted over for subset curves.
    ActivityScope { WithinSubset => "subset", AllDocuments => "corpus" }
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<R> {
    pub rel_start: i64,
    pub rel_end: i64,
    pub count: usize,
    /// `g`: lower median of the bucket entries.
    pub median_activity: R,
    /// `f = H(g)`.
    pub f: R,
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusGradientCurve<R> {
    pub points: Vec<CurvePoint<R>>,
    pub mode: ActivityMode,
    pub population_key: PopulationKey,
    pub subset: Subset,
}

impl<R: Real> StatusGradientCurve<R> {
    /// Last point starting before relative time 0 and first point at or after it.
    pub fn around_onset(&self) -> (Option<&CurvePoint<R>>, Option<&CurvePoint<R>>) {
        let before = self.points.iter().rev().find(|p| p.rel_end < 0);
        let after = self.points.iter().find(|p| p.rel_start >= 0);
        (before, after)
    }
}

/// Maps each bucket's lower-median entry through `cdf`. Empty buckets are
/// skipped with a warning.
pub fn status_gradient<R: Real>(
    buckets: &[RelativeTimeBucket<R>],
    cdf: &Ecdf<R>,
    mode: ActivityMode,
    population_key: PopulationKey,
    subset: Subset,
) -> StatusGradientCurve<R> {
    let points = buckets
        .iter()
        .filter_map(|b| {
            let Some(g) = lower_median(&b.entries) else {
                log::warn!("skipping empty relative-time bucket [{}, {}]", b.rel_start, b.rel_end);
                return None;
            };
            Some(CurvePoint {
                rel_start: b.rel_start,
                rel_end: b.rel_end,
                count: b.count(),
                median_activity: g,
                f: cdf.cdf(g),
                residual: b.residual,
            })
        })
        .collect();
    StatusGradientCurve {
        points,
        mode,
        population_key,
        subset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientOptions {
    pub population_key: PopulationKey,
    pub mode: ActivityMode,
    pub subset: Subset,
    pub scope: ActivityScope,
    pub threshold: usize,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            population_key: PopulationKey::Author,
            mode: ActivityMode::Final,
            subset: Subset::All,
            scope: ActivityScope::WithinSubset,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Builds the activity index, the value kind for the mode, and the
/// aggregate curve over all `trends`.
pub fn subset_gradient<R: Real>(
    corpus: &Corpus,
    trends: &[Trend],
    options: &GradientOptions,
) -> Result<StatusGradientCurve<R>, GradientError> {
    if trends.is_empty() {
        return Err(GradientError::NoTrends);
    }
    if options.threshold == 0 {
        return Err(GradientError::InvalidThreshold);
    }
    let index = ActivityIndex::<R>::build(corpus, options.population_key, options.subset, options.scope)?;
    let (values, cdf) = match options.mode {
        ActivityMode::Final => (index.final_values(), index.cdf().clone()),
        ActivityMode::Current => {
            let ranks = fractional_rank(corpus, &index);
            let cdf = Ecdf::new(ranks.clone());
            (ranks, cdf)
        }
    };
    let buckets = assemble_relative_buckets(corpus, &index, trends, &values, options.threshold);
    if buckets.is_empty() {
        return Err(GradientError::NoEntries);
    }
    Ok(status_gradient(
        &buckets,
        &cdf,
        options.mode,
        options.population_key,
        options.subset,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocKind, Document, Granularity, SECONDS_PER_WEEK};

    fn bucket(entries: &[f64]) -> RelativeTimeBucket<f64> {
        RelativeTimeBucket {
            rel_start: 0,
            rel_end: 0,
            entries: entries.to_vec(),
            residual: false,
        }
    }

    fn curve(buckets: &[RelativeTimeBucket<f64>], cdf: &Ecdf<f64>) -> StatusGradientCurve<f64> {
        status_gradient(buckets, cdf, ActivityMode::Final, PopulationKey::Author, Subset::All)
    }

    #[test]
    fn median_through_cdf() {
        let h = Ecdf::from_counts(&[1, 1, 5, 9]);
        let c = curve(&[bucket(&[1.0, 5.0, 9.0])], &h);
        assert_eq!(c.points[0].median_activity, 5.0);
        assert_eq!(c.points[0].f, 0.75);
    }

    #[test]
    fn all_max_gives_one() {
        let h = Ecdf::from_counts(&[1, 2, 3, 7]);
        let c = curve(&[bucket(&[7.0, 7.0])], &h);
        assert_eq!(c.points[0].f, 1.0);
    }

    #[test]
    fn empty_bucket_skipped() {
        let h = Ecdf::from_counts(&[1]);
        let c = curve(&[bucket(&[]), bucket(&[1.0])], &h);
        assert_eq!(c.points.len(), 1);
    }

    #[test]
    fn keyword_parsing() {
        assert_eq!("Producer".parse::<PopulationKey>(), Ok(PopulationKey::Producer));
        assert_eq!("current".parse::<ActivityMode>(), Ok(ActivityMode::Current));
        assert_eq!("comment".parse::<Subset>(), Ok(Subset::Comment));
        assert!("nope".parse::<Subset>().is_err());
        assert_eq!(Subset::ALL.len(), 3);
    }

    fn tagged_corpus(kind_for: impl Fn(usize) -> Option<DocKind>) -> Corpus {
        let docs = (0..200)
            .map(|i| Document {
                doc_id: format!("d{i}"),
                author_ids: vec![format!("a{}", i % 13)],
                timestamp: (i as i64 / 10) * SECONDS_PER_WEEK,
                tokens: if i % 3 == 0 { vec!["trend".into()] } else { vec![] },
                producer_id: None,
                kind: kind_for(i),
            })
            .collect();
        Corpus::from_documents(docs, Granularity::Week, Some(0)).unwrap()
    }

    #[test]
    fn posts_only_corpus_matches_all() {
        let corpus = tagged_corpus(|_| Some(DocKind::Post));
        let trends = [Trend::new("trend", 8)];
        let base = GradientOptions {
            threshold: 5,
            ..GradientOptions::default()
        };
        let all: StatusGradientCurve<f64> = subset_gradient(&corpus, &trends, &base).unwrap();
        let post: StatusGradientCurve<f64> = subset_gradient(
            &corpus,
            &trends,
            &GradientOptions {
                subset: Subset::Post,
                ..base
            },
        )
        .unwrap();
        assert_eq!(all.points, post.points);
        let opts = GradientOptions {
            mode: ActivityMode::Current,
            ..base
        };
        let a: StatusGradientCurve<f64> = subset_gradient(&corpus, &trends, &opts).unwrap();
        let p: StatusGradientCurve<f64> = subset_gradient(
            &corpus,
            &trends,
            &GradientOptions {
                subset: Subset::Post,
                ..opts
            },
        )
        .unwrap();
        assert_eq!(a.points, p.points);
    }

    #[test]
    fn comment_subset_needs_kind_tags() {
        let corpus = tagged_corpus(|_| None);
        let opts = GradientOptions {
            subset: Subset::Comment,
            ..GradientOptions::default()
        };
        assert_eq!(
            subset_gradient::<f64>(&corpus, &[Trend::new("trend", 0)], &opts),
            Err(GradientError::MissingField("kind"))
        );
    }

    #[test]
    fn empty_comment_subset_is_an_error() {
        let corpus = tagged_corpus(|_| Some(DocKind::Post));
        let opts = GradientOptions {
            subset: Subset::Comment,
            ..GradientOptions::default()
        };
        assert!(matches!(
            subset_gradient::<f64>(&corpus, &[Trend::new("trend", 0)], &opts),
            Err(GradientError::EmptyPopulation { .. })
        ));
    }

    #[test]
    fn curve_values_are_normalized() {
        let corpus = tagged_corpus(|_| None);
        for mode in ActivityMode::ALL {
            let opts = GradientOptions {
                mode: *mode,
                threshold: 3,
                ..GradientOptions::default()
            };
            let c: StatusGradientCurve<f64> = subset_gradient(&corpus, &[Trend::new("trend", 4)], &opts).unwrap();
            assert!(!c.points.is_empty());
            assert!(c.points.iter().all(|p| (0.0..=1.0).contains(&p.f)));
            assert!(c.points.windows(2).all(|w| w[0].rel_start < w[1].rel_start));
        }
    }

    #[test]
    fn single_precision_curve() {
        let corpus = tagged_corpus(|_| None);
        let opts = GradientOptions {
            threshold: 3,
            ..GradientOptions::default()
        };
        let c32: StatusGradientCurve<f32> = subset_gradient(&corpus, &[Trend::new("trend", 4)], &opts).unwrap();
        let c64: StatusGradientCurve<f64> = subset_gradient(&corpus, &[Trend::new("trend", 4)], &opts).unwrap();
        for (a, b) in c32.points.iter().zip(&c64.points) {
            assert!((a.f as f64 - b.f).abs() < 1e-6);
        }
    }
}
