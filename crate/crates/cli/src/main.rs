use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use trendgrad::burst::{DEFAULT_TARGET_MEDIAN, DEFAULT_TOP_K, DEFAULT_TRANSITION};
use trendgrad::gradient::DEFAULT_THRESHOLD;
use trendgrad::lifecycle::{DEFAULT_MIN_ACTIVITY, DEFAULT_STAGE_SIZE};
use trendgrad::pipeline::{self, PipelineConfig, DEFAULT_SUMMARY_SIZE};
use trendgrad::synth::{PlantedTrend, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "trendgrad",
    version,
    about = "Find trending words in a timestamped corpus and measure who adopts them"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic JSONL corpus with planted trends.
    Synth(SynthArgs),
    /// Detect trending words and write a burst report.
    Bursts(BurstsArgs),
    /// Status-gradient curves for the trending words.
    Gradient(GradientArgs),
    /// Trending-word usage by activity quintile and life stage.
    Lifecycle(LifecycleArgs),
}

type Overrides = Vec<(&'static str, String)>;

macro_rules! overrides {
    ($out:ident; $($key:literal => $val:expr),+ $(,)?) => {
        $(if let Some(v) = &$val {
            $out.push(($key, v.to_string()));
        })+
    };
}

#[derive(Args)]
struct CommonArgs {
    /// JSONL corpus, one document per line.
    input: PathBuf,
    /// Key-value settings file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for outputs and the run manifest [default: .].
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Directory for the tokenized-corpus cache.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    /// Bucket width: week, month or year [default: week].
    #[arg(long)]
    granularity: Option<String>,
    /// Start of bucket 0, epoch seconds or ISO-8601 [default: earliest document].
    #[arg(long)]
    epoch: Option<String>,
    /// unigram or bigram [default: unigram].
    #[arg(long)]
    ngram: Option<String>,
    /// File of stopwords, one per line.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Comma-separated author ids to drop (bots, moderators).
    #[arg(long, value_name = "IDS")]
    exclude_authors: Option<String>,
    /// Remove punctuation inside tokens ("e-mail" -> "email").
    #[arg(long)]
    fold_punctuation: bool,
    #[arg(
        long,
        value_name = "FIELD",
        help = "Record field holding the document id [default: id]"
    )]
    id_field: Option<String>,
    #[arg(
        long,
        value_name = "FIELD",
        help = "Record field holding the author id(s) [default: authors]"
    )]
    authors_field: Option<String>,
    #[arg(
        long,
        value_name = "FIELD",
        help = "Record field holding the timestamp [default: timestamp]"
    )]
    timestamp_field: Option<String>,
    #[arg(long, value_name = "FIELD", help = "Record field holding the text [default: text]")]
    text_field: Option<String>,
    #[arg(
        long,
        value_name = "FIELD",
        help = "Record field holding the producer id [default: producer]"
    )]
    producer_field: Option<String>,
    #[arg(
        long,
        value_name = "FIELD",
        help = "Record field holding the post/comment kind [default: kind]"
    )]
    kind_field: Option<String>,

    #[arg(long, help = format!("Automaton state-switch probability p [default: {DEFAULT_TRANSITION}]"))]
    transition: Option<f64>,
    /// Fixed rate multiplier c; skips calibration.
    #[arg(long)]
    multiplier: Option<f64>,
    /// Comma-separated candidate multipliers [default: 1.5,2,...,10].
    #[arg(long, value_name = "LIST")]
    multiplier_grid: Option<String>,
    #[arg(long, help = format!("Median burst occurrences the calibrated c must reach [default: {DEFAULT_TARGET_MEDIAN}]"))]
    target_median: Option<u64>,
    /// Shortest accepted burst in buckets [default: 8 for weeks, 2 for months, 3 for years].
    #[arg(long)]
    min_burst_len: Option<u32>,
    /// Buckets per longevity window [default: 13 for weeks, 3 for months, 1 for years].
    #[arg(long)]
    longevity_window: Option<u32>,
    /// Longevity windows per side [default: 4, or 1 for years].
    #[arg(long)]
    longevity_quarters: Option<u32>,
    #[arg(long, help = format!("Trending words kept [default: {DEFAULT_TOP_K}]"))]
    top_k: Option<usize>,
    #[arg(long, help = format!("Rows in the top-words summary [default: {DEFAULT_SUMMARY_SIZE}]"))]
    summary_size: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self, out: &mut Overrides) {
        overrides!(out;
            "granularity" => self.granularity,
            "epoch" => self.epoch,
            "ngram" => self.ngram,
            "stopwords" => self.stopwords.as_ref().map(|p| p.display()),
            "exclude_authors" => self.exclude_authors,
            "id_field" => self.id_field,
            "authors_field" => self.authors_field,
            "timestamp_field" => self.timestamp_field,
            "text_field" => self.text_field,
            "producer_field" => self.producer_field,
            "kind_field" => self.kind_field,
            "transition" => self.transition,
            "multiplier" => self.multiplier,
            "multiplier_grid" => self.multiplier_grid,
            "target_median" => self.target_median,
            "min_burst_len" => self.min_burst_len,
            "longevity_window" => self.longevity_window,
            "longevity_quarters" => self.longevity_quarters,
            "top_k" => self.top_k,
            "summary_size" => self.summary_size,
            "cache_dir" => self.cache_dir.as_ref().map(|p| p.display()),
            "threads" => self.threads,
            "out_dir" => self.out.as_ref().map(|p| p.display()),
        );
        if self.fold_punctuation {
            out.push(("fold_punctuation", "true".into()));
        }
    }
}

#[derive(Args)]
struct BurstsArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TrendSource {
    /// Burst report from `bursts`; detected inline when omitted.
    #[arg(long, value_name = "FILE")]
    bursts: Option<PathBuf>,
}

#[derive(Args)]
struct GradientArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    source: TrendSource,
    #[arg(long, help = format!("Minimum entries per merged relative-time bucket [default: {DEFAULT_THRESHOLD}]"))]
    threshold: Option<usize>,
    /// Comma-separated: author, producer [default: author].
    #[arg(long, value_name = "LIST")]
    population_key: Option<String>,
    /// Comma-separated: final, current [default: final].
    #[arg(long, value_name = "LIST")]
    mode: Option<String>,
    /// Comma-separated: all, post, comment [default: all].
    #[arg(long, value_name = "LIST")]
    subset: Option<String>,
    /// Count subset activity within the subset or over the whole corpus [default: subset].
    #[arg(long)]
    scope: Option<String>,
    /// Also write one (noisy) curve per word.
    #[arg(long)]
    per_word: bool,
}

#[derive(Args)]
struct LifecycleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    source: TrendSource,
    #[arg(long, help = format!("Documents an author needs to be kept [default: {DEFAULT_MIN_ACTIVITY}]"))]
    min_activity: Option<u64>,
    #[arg(long, help = format!("Documents per life stage [default: {DEFAULT_STAGE_SIZE}]"))]
    stage_size: Option<usize>,
    /// Count bursty words anytime or only inside their burst [default: anytime].
    #[arg(long)]
    usage_window: Option<String>,
}

fn build_config(common: &CommonArgs, extra: Overrides) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &common.config {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        config
            .apply_file(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
    }
    let mut all = Vec::new();
    common.overrides(&mut all);
    all.extend(extra);
    for (key, value) in all {
        config.set(key, &value)?;
    }
    Ok(config)
}

#[derive(Args)]
struct SynthArgs {
    /// Output JSONL file.
    #[arg(short, long, value_name = "FILE")]
    out: PathBuf,
    /// Ground-truth sidecar [default: <out>.truth.json].
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// JSON spec to start from; flags take precedence.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long, help = format!("RNG seed [default: {}]", SyntheticSpec::default().seed))]
    seed: Option<u64>,
    #[arg(long, help = format!("Number of authors [default: {}]", SyntheticSpec::default().authors))]
    authors: Option<usize>,
    /// Add authors until this many documents exist (overrides --authors).
    #[arg(long)]
    docs: Option<u64>,
    #[arg(long, help = format!("Weeks covered [default: {}]", SyntheticSpec::default().weeks))]
    weeks: Option<u32>,
    #[arg(long, help = format!("Timestamp of week 0 [default: {}]", SyntheticSpec::default().epoch))]
    epoch: Option<i64>,
    #[arg(long, help = format!("Power-law exponent of author activity [default: {}]", SyntheticSpec::default().activity_exponent))]
    activity_exponent: Option<f64>,
    #[arg(long, help = format!("Cap on documents per author [default: {}]", SyntheticSpec::default().max_activity))]
    max_activity: Option<u64>,
    #[arg(long, help = format!("Background vocabulary size [default: {}]", SyntheticSpec::default().vocabulary))]
    vocabulary: Option<usize>,
    #[arg(long, help = format!("Background words per document [default: {}]", SyntheticSpec::default().words_per_doc))]
    words_per_doc: Option<usize>,
    /// Number of producers; 0 leaves them out [default: 0].
    #[arg(long)]
    producers: Option<usize>,
    /// Tag documents post/comment with this post share.
    #[arg(long)]
    post_fraction: Option<f64>,
    /// Planted trend word:start:end:multiplier[:schedule[:base_rate]], repeatable.
    /// Schedules: uniform, elite-led, periphery-led.
    #[arg(long = "trend", value_name = "SPEC", value_parser = PlantedTrend::parse)]
    trends: Vec<PlantedTrend>,
}

fn synth_spec(args: &SynthArgs) -> Result<SyntheticSpec> {
    let mut spec = match &args.spec {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SyntheticSpec::default(),
    };
    macro_rules! set {
        ($($field:ident <- $arg:expr),+) => {
            $(if let Some(v) = $arg {
                spec.$field = v;
            })+
        };
    }
    set!(seed <- args.seed, authors <- args.authors, weeks <- args.weeks, epoch <- args.epoch,
         activity_exponent <- args.activity_exponent, max_activity <- args.max_activity,
         vocabulary <- args.vocabulary, words_per_doc <- args.words_per_doc, producers <- args.producers);
    if args.docs.is_some() {
        spec.target_docs = args.docs;
    }
    if args.post_fraction.is_some() {
        spec.post_fraction = args.post_fraction;
    }
    if !args.trends.is_empty() {
        spec.trends = args.trends.clone();
    }
    Ok(spec)
}

fn default_truth_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let spec = synth_spec(&args)?;
            let truth_path = args.truth.clone().unwrap_or_else(|| default_truth_path(&args.out));
            let truth = pipeline::cmd_synth(&spec, &args.out, &truth_path)?;
            println!(
                "wrote {} documents to {} ({} planted trends, truth in {})",
                truth.documents,
                args.out.display(),
                truth.planted.len(),
                truth_path.display()
            );
        }
        Command::Bursts(args) => {
            let config = build_config(&args.common, Vec::new())?;
            let set = pipeline::cmd_bursts(&args.common.input, &config)?;
            let c = set.calibration.as_ref().map_or(f64::NAN, |c| c.multiplier);
            println!(
                "{} trending words (c = {c}) written to {}",
                set.trends.len(),
                config.out_dir.join(pipeline::BURST_REPORT).display()
            );
        }
        Command::Gradient(args) => {
            let mut extra = Vec::new();
            overrides!(extra;
                "bursts" => args.source.bursts.as_ref().map(|p| p.display()),
                "threshold" => args.threshold,
                "population_key" => args.population_key,
                "mode" => args.mode,
                "subset" => args.subset,
                "scope" => args.scope,
            );
            if args.per_word {
                extra.push(("per_word", "true".into()));
            }
            let config = build_config(&args.common, extra)?;
            let curves = pipeline::cmd_gradient(&args.common.input, &config)?;
            for (curve, options) in curves.iter().zip(config.gradient_variants()) {
                println!(
                    "{}: {} points",
                    config.out_dir.join(pipeline::curve_file_name(&options)).display(),
                    curve.points.len()
                );
            }
        }
        Command::Lifecycle(args) => {
            let mut extra = Vec::new();
            overrides!(extra;
                "bursts" => args.source.bursts.as_ref().map(|p| p.display()),
                "min_activity" => args.min_activity,
                "stage_size" => args.stage_size,
                "usage_window" => args.usage_window,
            );
            let config = build_config(&args.common, extra)?;
            let table = pipeline::cmd_lifecycle(&args.common.input, &config)?;
            println!(
                "{} cells written to {}",
                table.rows.len(),
                config.out_dir.join(pipeline::LIFE_STAGES).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
