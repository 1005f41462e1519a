use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, PipelineError};
use crate::burst::{BurstInterval, GridPoint, TrendFilterConfig};
use crate::corpus::{bucket_start_date, Corpus};
use crate::gradient::StatusGradientCurve;
use crate::lifecycle::{LifeStageRow, QuintileAssignment};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` through a sibling temp file so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir.display(), e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| PipelineError::io(path.display(), e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path.display(), e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            name: path
                .file_name()
                .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    /// The `c` used for detection.
    pub multiplier: f64,
    /// `None` when the multiplier was fixed by configuration.
    pub satisfied: Option<bool>,
    pub grid: Vec<GridPoint<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub file: FileDigest,
    pub documents: usize,
    pub buckets: usize,
    pub epoch: i64,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuintileSummary {
    pub cutoffs: [u64; 4],
    pub document_mass: [u64; 5],
    pub retained_authors: usize,
    pub retained_documents: u64,
}

impl From<&QuintileAssignment> for QuintileSummary {
    fn from(q: &QuintileAssignment) -> Self {
        Self {
            cutoffs: q.cutoffs,
            document_mass: q.document_mass,
            retained_authors: q.retained_authors(),
            retained_documents: q.retained_total,
        }
    }
}

/// Reproducibility record written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub filter: TrendFilterConfig<f64>,
    pub input: InputSummary,
    pub burst_report: Option<FileDigest>,
    pub calibration: Option<CalibrationSummary>,
    pub trends: usize,
    #[serde(default)]
    pub quintiles: Option<QuintileSummary>,
    pub outputs: Vec<FileDigest>,
}

fn csv_bytes(
    build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w)?;
    w.into_inner()
        .map_err(|e| PipelineError::io("csv buffer", e.into_error()))
}

pub fn burst_report_csv(bursts: &[BurstInterval<f64>]) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|w| {
        w.write_record(["word", "start_bucket", "end_bucket", "weight", "occurrences", "alpha"])?;
        for b in bursts {
            w.write_record([
                b.word.clone(),
                b.start_bucket.to_string(),
                b.end_bucket.to_string(),
                b.weight.to_string(),
                b.occurrences.to_string(),
                b.alpha.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn read_burst_report(bytes: &[u8]) -> Result<Vec<BurstInterval<f64>>, PipelineError> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let b: BurstInterval<f64> = row?;
        if b.end_bucket < b.start_bucket {
            return Err(PipelineError::Report(format!(
                "'{}' ends (bucket {}) before it starts (bucket {})",
                b.word, b.end_bucket, b.start_bucket
            )));
        }
        out.push(b);
    }
    Ok(out)
}

/// Highest-weight trends with their calendar span.
pub fn top_words_csv(corpus: &Corpus, bursts: &[BurstInterval<f64>], limit: usize) -> Result<Vec<u8>, PipelineError> {
    let date = |bucket: u32| bucket_start_date(bucket, corpus.granularity(), corpus.epoch());
    csv_bytes(|w| {
        w.write_record(["rank", "word", "weight", "start_date", "end_date", "occurrences"])?;
        for (rank, b) in bursts.iter().take(limit).enumerate() {
            let start = date(b.start_bucket).map(|d| d.to_string()).unwrap_or_default();
            let end = date(b.end_bucket + 1)
                .and_then(|d| d.checked_sub_signed(Duration::days(1)))
                .map(|d| d.to_string())
                .unwrap_or_default();
            w.write_record([
                (rank + 1).to_string(),
                b.word.clone(),
                format!("{:.3}", b.weight),
                start,
                end,
                b.occurrences.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn curve_csv(curve: &StatusGradientCurve<f64>) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|w| {
        w.write_record(["rel_start", "rel_end", "count", "median_activity", "f", "residual_flag"])?;
        for p in &curve.points {
            w.write_record([
                p.rel_start.to_string(),
                p.rel_end.to_string(),
                p.count.to_string(),
                p.median_activity.to_string(),
                p.f.to_string(),
                flag(p.residual).to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn per_word_curves_csv(curves: &[(String, StatusGradientCurve<f64>)]) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|w| {
        w.write_record([
            "word",
            "rel_start",
            "rel_end",
            "count",
            "median_activity",
            "f",
            "residual_flag",
        ])?;
        for (word, curve) in curves {
            for p in &curve.points {
                w.write_record([
                    word.clone(),
                    p.rel_start.to_string(),
                    p.rel_end.to_string(),
                    p.count.to_string(),
                    p.median_activity.to_string(),
                    p.f.to_string(),
                    flag(p.residual).to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

/// Stages are written 1-based.
pub fn life_stage_csv<'a>(rows: impl IntoIterator<Item = &'a LifeStageRow<f64>>) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|w| {
        w.write_record(["quintile", "stage", "docs", "avg_bursty_words"])?;
        for r in rows {
            w.write_record([
                r.quintile.to_string(),
                (r.stage + 1).to_string(),
                r.docs.to_string(),
                r.avg_bursty_words.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn manifest_json(manifest: &RunManifest) -> Result<Vec<u8>, PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.write_all(b"\n").expect("writing to a Vec");
    Ok(bytes)
}
