//! End-to-end runs over a JSONL corpus: ingest (with an optional cache),
//! trend detection, status-gradient curves and life-stage tables, each
//! accompanied by a run manifest.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::burst::{calibrate_multiplier, detect_all, filter_and_rank, BurstError, BurstInterval};
use crate::corpus::{ingest, read_jsonl, Corpus, CorpusError};
use crate::gradient::{subset_gradient, GradientError, GradientOptions, StatusGradientCurve, Trend};
use crate::lifecycle::{life_stage_usage, quintile_cutoffs, BurstyWord, LifeStageTable, LifecycleError};
use crate::synth::{generate, GroundTruth, SynthError, SyntheticSpec};

pub use config::{PipelineConfig, DEFAULT_SUMMARY_SIZE};
pub use output::{
    burst_report_csv, curve_csv, life_stage_csv, per_word_curves_csv, read_burst_report, sha256_hex, top_words_csv,
    CalibrationSummary, FileDigest, InputSummary, QuintileSummary, RunManifest,
};

pub const BURST_REPORT: &str = "bursts.csv";
pub const TOP_WORDS: &str = "top_words.csv";
pub const LIFE_STAGES: &str = "life_stages.csv";
pub const LIFE_STAGES_MIDDLE: &str = "life_stages_middle.csv";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("setting '{key}': {reason}")]
    Config { key: String, reason: String },
    #[error("burst report: {0}")]
    Report(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Burst(#[from] BurstError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl PipelineError {
    pub(crate) fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub file: FileDigest,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| PipelineError::io(path.display(), e))
}

fn cache_path(config: &PipelineConfig, input_sha: &str) -> Result<Option<PathBuf>> {
    let Some(dir) = &config.cache_dir else {
        return Ok(None);
    };
    let options = serde_json::to_vec(&config.ingest_options()?)?;
    let key = sha256_hex(&[input_sha.as_bytes(), b"\n", &options].concat());
    Ok(Some(dir.join(format!("{key}.corpus.json"))))
}

/// Reads and tokenizes `input`, going through the cache when one is configured.
pub fn load_corpus(input: &Path, config: &PipelineConfig) -> Result<LoadedCorpus> {
    let bytes = read_file(input)?;
    let file = FileDigest::of(input, &bytes);
    let cached = cache_path(config, &file.sha256)?;
    if let Some(path) = cached.as_ref().filter(|p| p.exists()) {
        match fs::File::open(path)
            .map_err(CorpusError::from)
            .and_then(|f| Corpus::from_json_reader(std::io::BufReader::new(f)))
        {
            Ok(corpus) => {
                log::info!("loaded tokenized corpus from {}", path.display());
                return Ok(LoadedCorpus { corpus, file });
            }
            Err(e) => log::warn!("ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let records = read_jsonl(bytes.as_slice())?;
    let corpus = ingest(&records, &config.ingest_options()?)?;
    log::info!(
        "ingested {} documents over {} buckets, {} terms",
        corpus.len(),
        corpus.num_buckets(),
        corpus.vocabulary().len()
    );
    if let Some(path) = cached {
        let mut buf = Vec::new();
        corpus.to_json_writer(&mut buf)?;
        output::write_atomic(&path, &buf)?;
    }
    Ok(LoadedCorpus { corpus, file })
}

/// Ranked trends plus how the multiplier was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSet {
    pub trends: Vec<BurstInterval<f64>>,
    pub calibration: Option<CalibrationSummary>,
    pub report: Option<FileDigest>,
}

/// Calibrates (unless a multiplier is fixed), detects and filters.
pub fn detect_trends(corpus: &Corpus, config: &PipelineConfig) -> Result<TrendSet> {
    let filter = config.filter_config();
    filter.validate()?;
    let (bursts, calibration) = match config.multiplier {
        Some(c) => {
            let bursts = detect_all(corpus, c, config.transition)?;
            let summary = CalibrationSummary {
                multiplier: c,
                satisfied: None,
                grid: Vec::new(),
            };
            (bursts, summary)
        }
        None => {
            let cal = calibrate_multiplier(corpus, &filter)?;
            if !cal.satisfied {
                log::warn!(
                    "no multiplier reaches a median of {} occurrences; using c = {}",
                    filter.target_median_occurrences,
                    cal.multiplier
                );
            }
            let summary = CalibrationSummary {
                multiplier: cal.multiplier,
                satisfied: Some(cal.satisfied),
                grid: cal.grid,
            };
            (cal.bursts, summary)
        }
    };
    log::info!("c = {}: {} words burst", calibration.multiplier, bursts.len());
    let trends = filter_and_rank(corpus, bursts, &filter);
    Ok(TrendSet {
        trends,
        calibration: Some(calibration),
        report: None,
    })
}

/// Reads the configured burst report, or detects trends inline.
pub fn trends_for(corpus: &Corpus, config: &PipelineConfig) -> Result<TrendSet> {
    match &config.bursts {
        Some(path) => {
            let bytes = read_file(path)?;
            Ok(TrendSet {
                trends: read_burst_report(&bytes)?,
                calibration: None,
                report: Some(FileDigest::of(path, &bytes)),
            })
        }
        None => detect_trends(corpus, config),
    }
}

fn with_threads<T: Send>(config: &PipelineConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match config.threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Threads(e.to_string()))?
            .install(f),
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<FileDigest>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        output::write_atomic(&path, bytes)?;
        self.written.push(FileDigest::of(&path, bytes));
        Ok(())
    }

    fn finish(self, command: &str, mut manifest: RunManifest) -> Result<()> {
        manifest.command = command.to_string();
        manifest.outputs = self.written;
        let bytes = output::manifest_json(&manifest)?;
        output::write_atomic(&self.dir.join(format!("{command}.manifest.json")), &bytes)
    }
}

fn manifest(config: &PipelineConfig, loaded: &LoadedCorpus, trends: &TrendSet) -> RunManifest {
    let corpus = &loaded.corpus;
    RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: String::new(),
        config: config.clone(),
        filter: config.filter_config(),
        input: InputSummary {
            file: loaded.file.clone(),
            documents: corpus.len(),
            buckets: corpus.num_buckets(),
            epoch: corpus.epoch(),
            vocabulary: corpus.vocabulary().len(),
        },
        burst_report: trends.report.clone(),
        calibration: trends.calibration.clone(),
        trends: trends.trends.len(),
        quintiles: None,
        outputs: Vec::new(),
    }
}

/// Writes the burst report, the top-words summary and a manifest to `out_dir`.
pub fn cmd_bursts(input: &Path, config: &PipelineConfig) -> Result<TrendSet> {
    with_threads(config, || {
        let loaded = load_corpus(input, config)?;
        let set = detect_trends(&loaded.corpus, config)?;
        let mut out = Outputs::new(&config.out_dir);
        out.write(BURST_REPORT, &burst_report_csv(&set.trends)?)?;
        out.write(
            TOP_WORDS,
            &top_words_csv(&loaded.corpus, &set.trends, config.summary_size)?,
        )?;
        out.finish("bursts", manifest(config, &loaded, &set))?;
        Ok(set)
    })
}

pub fn curve_file_name(options: &GradientOptions) -> String {
    format!(
        "gradient_{}_{}_{}.csv",
        options.population_key, options.mode, options.subset
    )
}

fn per_word_curves(
    corpus: &Corpus,
    trends: &[Trend],
    options: &GradientOptions,
) -> Result<Vec<(String, StatusGradientCurve<f64>)>> {
    let curves: Vec<Option<(String, StatusGradientCurve<f64>)>> = trends
        .par_iter()
        .map(|t| match subset_gradient(corpus, std::slice::from_ref(t), options) {
            Ok(curve) => Ok(Some((t.word.clone(), curve))),
            Err(GradientError::NoEntries) => Ok(None),
            Err(e) => Err(PipelineError::from(e)),
        })
        .collect::<Result<_>>()?;
    Ok(curves.into_iter().flatten().collect())
}

/// One aggregate curve per requested (population key, mode, subset).
pub fn cmd_gradient(input: &Path, config: &PipelineConfig) -> Result<Vec<StatusGradientCurve<f64>>> {
    with_threads(config, || {
        let loaded = load_corpus(input, config)?;
        let set = trends_for(&loaded.corpus, config)?;
        let trends: Vec<Trend> = set
            .trends
            .iter()
            .map(|b| Trend::new(b.word.clone(), b.start_bucket))
            .collect();
        let variants = config.gradient_variants();
        let results: Vec<(StatusGradientCurve<f64>, Option<Vec<u8>>)> = variants
            .par_iter()
            .map(|options| {
                let curve = subset_gradient::<f64>(&loaded.corpus, &trends, options)?;
                let per_word = if config.per_word {
                    Some(per_word_curves_csv(&per_word_curves(
                        &loaded.corpus,
                        &trends,
                        options,
                    )?)?)
                } else {
                    None
                };
                Ok((curve, per_word))
            })
            .collect::<Result<_>>()?;
        let mut out = Outputs::new(&config.out_dir);
        let mut curves = Vec::with_capacity(results.len());
        for (options, (curve, per_word)) in variants.iter().zip(results) {
            let name = curve_file_name(options);
            out.write(&name, &curve_csv(&curve)?)?;
            if let Some(bytes) = per_word {
                out.write(&name.replace(".csv", "_per_word.csv"), &bytes)?;
            }
            curves.push(curve);
        }
        out.finish("gradient", manifest(config, &loaded, &set))?;
        Ok(curves)
    })
}

/// Writes all quintiles and the middle three as separate tables.
pub fn cmd_lifecycle(input: &Path, config: &PipelineConfig) -> Result<LifeStageTable<f64>> {
    with_threads(config, || {
        let loaded = load_corpus(input, config)?;
        let set = trends_for(&loaded.corpus, config)?;
        let assignment = quintile_cutoffs(&loaded.corpus, config.min_activity)?;
        let bursty: Vec<BurstyWord> = set.trends.iter().map(BurstyWord::from).collect();
        let table = life_stage_usage::<f64>(
            &loaded.corpus,
            &assignment,
            &bursty,
            config.stage_size,
            config.usage_window,
        )?;
        let mut out = Outputs::new(&config.out_dir);
        out.write(LIFE_STAGES, &life_stage_csv(&table.rows)?)?;
        out.write(LIFE_STAGES_MIDDLE, &life_stage_csv(table.middle_rows())?)?;
        let mut m = manifest(config, &loaded, &set);
        m.quintiles = Some(QuintileSummary::from(&assignment));
        out.finish("lifecycle", m)?;
        Ok(table)
    })
}

/// Generates a corpus as JSONL plus its ground-truth sidecar.
pub fn cmd_synth(spec: &SyntheticSpec, corpus_path: &Path, truth_path: &Path) -> Result<GroundTruth> {
    let synthetic = generate(spec)?;
    let mut jsonl = Vec::new();
    synthetic.write_jsonl(&mut jsonl)?;
    output::write_atomic(corpus_path, &jsonl)?;
    let mut truth = Vec::new();
    synthetic.write_truth(&mut truth)?;
    truth.push(b'\n');
    output::write_atomic(truth_path, &truth)?;
    Ok(synthetic.truth)
}
