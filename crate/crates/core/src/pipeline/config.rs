use std::io::BufRead;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::burst::{TrendFilterConfig, DEFAULT_TARGET_MEDIAN, DEFAULT_TOP_K, DEFAULT_TRANSITION};
use crate::corpus::{parse_timestamp, Granularity, IngestOptions, NgramMode, Schema, TokenizerConfig};
use crate::gradient::{ActivityMode, ActivityScope, GradientOptions, PopulationKey, Subset, DEFAULT_THRESHOLD};
use crate::lifecycle::{UsageWindow, DEFAULT_MIN_ACTIVITY, DEFAULT_STAGE_SIZE};

pub const DEFAULT_SUMMARY_SIZE: usize = 25;

/// Every setting of a pipeline run. Keys accepted by [`PipelineConfig::set`]
/// are the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub granularity: Granularity,
    pub epoch: Option<i64>,
    pub ngram: NgramMode,
    pub stopwords: Option<PathBuf>,
    pub exclude_authors: Vec<String>,
    pub fold_punctuation: bool,
    pub schema: Schema,

    pub transition: f64,
    /// Fixed multiplier; skips calibration when set.
    pub multiplier: Option<f64>,
    pub multiplier_grid: Vec<f64>,
    pub target_median: u64,
    /// Granularity default when unset.
    pub min_burst_len: Option<u32>,
    pub longevity_window: Option<u32>,
    pub longevity_quarters: Option<u32>,
    pub top_k: usize,
    pub summary_size: usize,

    pub threshold: usize,
    pub population_key: Vec<PopulationKey>,
    pub mode: Vec<ActivityMode>,
    pub subset: Vec<Subset>,
    pub scope: ActivityScope,
    pub per_word: bool,

    pub min_activity: u64,
    pub stage_size: usize,
    pub usage_window: UsageWindow,

    // Where things live and how fast they run. Kept out of the manifest so
    // outputs do not depend on them; a burst report is recorded by digest.
    /// Existing burst report to reuse instead of detecting inline.
    #[serde(skip)]
    pub bursts: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            granularity: Granularity::Week,
            epoch: None,
            ngram: NgramMode::Unigram,
            stopwords: None,
            exclude_authors: Vec::new(),
            fold_punctuation: false,
            schema: Schema::default(),
            transition: DEFAULT_TRANSITION,
            multiplier: None,
            multiplier_grid: TrendFilterConfig::<f64>::default_grid(),
            target_median: DEFAULT_TARGET_MEDIAN,
            min_burst_len: None,
            longevity_window: None,
            longevity_quarters: None,
            top_k: DEFAULT_TOP_K,
            summary_size: DEFAULT_SUMMARY_SIZE,
            threshold: DEFAULT_THRESHOLD,
            population_key: vec![PopulationKey::Author],
            mode: vec![ActivityMode::Final],
            subset: vec![Subset::All],
            scope: ActivityScope::WithinSubset,
            per_word: false,
            min_activity: DEFAULT_MIN_ACTIVITY,
            stage_size: DEFAULT_STAGE_SIZE,
            usage_window: UsageWindow::Anytime,
            bursts: None,
            out_dir: PathBuf::from("."),
            cache_dir: None,
            threads: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| PipelineError::Config {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, PipelineError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(PipelineError::Config {
            key: key.to_string(),
            reason: "empty list".into(),
        });
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, PipelineError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(PipelineError::Config {
            key: key.to_string(),
            reason: format!("'{other}' is not a boolean"),
        }),
    }
}

/// Empty or `none` clears an optional setting.
fn optional<T>(value: &str, f: impl FnOnce(&str) -> Result<T, PipelineError>) -> Result<Option<T>, PipelineError> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "granularity" => self.granularity = parse(k, value)?,
            "epoch" => {
                self.epoch = optional(value, |v| {
                    parse_timestamp(v).ok_or_else(|| PipelineError::Config {
                        key: k.into(),
                        reason: format!("'{v}' is neither epoch seconds nor an ISO-8601 date"),
                    })
                })?
            }
            "ngram" => self.ngram = parse(k, value)?,
            "stopwords" => self.stopwords = optional(value, |v| Ok(PathBuf::from(v)))?,
            "exclude_authors" => {
                self.exclude_authors = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "fold_punctuation" => self.fold_punctuation = parse_bool(k, value)?,
            "id_field" => self.schema.id = value.trim().to_string(),
            "authors_field" => self.schema.authors = value.trim().to_string(),
            "timestamp_field" => self.schema.timestamp = value.trim().to_string(),
            "text_field" => self.schema.text = value.trim().to_string(),
            "producer_field" => self.schema.producer = value.trim().to_string(),
            "kind_field" => self.schema.kind = value.trim().to_string(),
            "transition" => self.transition = parse(k, value)?,
            "multiplier" => self.multiplier = optional(value, |v| parse(k, v))?,
            "multiplier_grid" => self.multiplier_grid = parse_list(k, value)?,
            "target_median" => self.target_median = parse(k, value)?,
            "min_burst_len" => self.min_burst_len = optional(value, |v| parse(k, v))?,
            "longevity_window" => self.longevity_window = optional(value, |v| parse(k, v))?,
            "longevity_quarters" => self.longevity_quarters = optional(value, |v| parse(k, v))?,
            "top_k" => self.top_k = parse(k, value)?,
            "summary_size" => self.summary_size = parse(k, value)?,
            "threshold" => self.threshold = parse(k, value)?,
            "population_key" => self.population_key = parse_list(k, value)?,
            "mode" => self.mode = parse_list(k, value)?,
            "subset" => self.subset = parse_list(k, value)?,
            "scope" => self.scope = parse(k, value)?,
            "per_word" => self.per_word = parse_bool(k, value)?,
            "min_activity" => self.min_activity = parse(k, value)?,
            "stage_size" => self.stage_size = parse(k, value)?,
            "usage_window" => self.usage_window = parse(k, value)?,
            "bursts" => self.bursts = optional(value, |v| Ok(PathBuf::from(v)))?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "cache_dir" => self.cache_dir = optional(value, |v| Ok(PathBuf::from(v)))?,
            "threads" => self.threads = optional(value, |v| parse(k, v))?,
            _ => {
                return Err(PipelineError::Config {
                    key: key.clone(),
                    reason: "unknown setting".into(),
                })
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment; blank lines are skipped.
    pub fn apply_file<R: BufRead>(&mut self, reader: R) -> Result<(), PipelineError> {
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| PipelineError::io("config file", e))?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::Config {
                    key: format!("line {}", idx + 1),
                    reason: "expected key = value".into(),
                });
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn filter_config(&self) -> TrendFilterConfig<f64> {
        let base = TrendFilterConfig::<f64>::for_granularity(self.granularity);
        TrendFilterConfig {
            transition: self.transition,
            min_burst_len: self.min_burst_len.unwrap_or(base.min_burst_len),
            longevity_window: self.longevity_window.unwrap_or(base.longevity_window),
            longevity_quarters: self.longevity_quarters.unwrap_or(base.longevity_quarters),
            top_k: self.top_k,
            target_median_occurrences: self.target_median,
            multiplier_grid: self.multiplier_grid.clone(),
        }
    }

    pub fn tokenizer(&self) -> Result<TokenizerConfig, PipelineError> {
        let mut tok = TokenizerConfig::new(self.ngram).with_excluded_authors(self.exclude_authors.iter().cloned());
        tok.fold_interior_punctuation = self.fold_punctuation;
        if let Some(path) = &self.stopwords {
            let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path.display(), e))?;
            let words = crate::corpus::read_stopwords(std::io::BufReader::new(file))
                .map_err(|e| PipelineError::io(path.display(), e))?;
            tok = tok.with_stopwords(words);
        }
        Ok(tok)
    }

    pub fn ingest_options(&self) -> Result<IngestOptions, PipelineError> {
        Ok(IngestOptions {
            schema: self.schema.clone(),
            tokenizer: self.tokenizer()?,
            granularity: self.granularity,
            epoch: self.epoch,
        })
    }

    /// Every requested (population key, mode, subset) combination, in a fixed order.
    pub fn gradient_variants(&self) -> Vec<GradientOptions> {
        let mut out = Vec::new();
        for &population_key in &self.population_key {
            for &mode in &self.mode {
                for &subset in &self.subset {
                    let options = GradientOptions {
                        population_key,
                        mode,
                        subset,
                        scope: self.scope,
                        threshold: self.threshold,
                    };
                    if !out.contains(&options) {
                        out.push(options);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.transition, 0.1);
        assert_eq!(c.threshold, 1500);
        assert_eq!(c.top_k, 500);
        assert_eq!(c.target_median, 5000);
        assert_eq!(c.filter_config().min_burst_len, 8);
        let mut y = c.clone();
        y.set("granularity", "year").unwrap();
        assert_eq!(y.filter_config().min_burst_len, 3);
    }

    #[test]
    fn file_then_override() {
        let text = "# comment\ntop_k = 50\nmode = final, current  # both\n\nepoch = 2011-01-01\n";
        let mut c = PipelineConfig::default();
        c.apply_file(text.as_bytes()).unwrap();
        assert_eq!(c.top_k, 50);
        assert_eq!(c.mode, vec![ActivityMode::Final, ActivityMode::Current]);
        assert_eq!(c.epoch, Some(1_293_840_000));
        c.set("top-k", "7").unwrap();
        assert_eq!(c.top_k, 7);
        assert_eq!(c.gradient_variants().len(), 2);
    }

    #[test]
    fn bad_settings() {
        let mut c = PipelineConfig::default();
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.set("subset", "blog").is_err());
        assert!(c.set("mode", "").is_err());
        assert!(c.apply_file("top_k 5".as_bytes()).is_err());
    }
}
