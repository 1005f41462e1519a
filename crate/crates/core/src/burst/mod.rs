//! Trend detection: per-word burst decoding, multiplier calibration and
//! the length/longevity filters used to pick the trending words.

mod automaton;
mod detect;

use thiserror::Error;

pub use automaton::{
    burst_weight, emission_log_likelihood, high_runs, path_log_likelihood, viterbi_states, AutomatonParams, State,
};
pub use detect::{
    calibrate_multiplier, detect_all, extract_bursts, extract_from_series, filter_and_rank, passes_longevity,
    BurstInterval, Calibration, GridPoint, TrendFilterConfig, DEFAULT_TARGET_MEDIAN, DEFAULT_TOP_K, DEFAULT_TRANSITION,
};

#[derive(Debug, Error, PartialEq)]
pub enum BurstError {
    #[error("bucket {bucket}: {hits} hits exceed {docs} documents")]
    HitsExceedDocs { bucket: usize, hits: u64, docs: u64 },
    #[error("invalid automaton parameters: {0}")]
    InvalidParams(String),
    #[error("frequency series is empty")]
    EmptySeries,
    #[error("path has {path} states but the series has {series} buckets")]
    PathLengthMismatch { path: usize, series: usize },
    #[error("[{start}, {end}] is not a maximal high-state run of the path")]
    NotMaximalRun { start: usize, end: usize },
    #[error("corpus vocabulary is empty")]
    EmptyVocabulary,
    #[error("invalid trend filter configuration: {0}")]
    InvalidConfig(String),
}
