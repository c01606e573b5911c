//! Report document, flat CSV export and the evaluation driver behind them.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ggmeval::graph::{filter_by_size, sample_subset};
use ggmeval::harness::{aggregate_runs, RunContext};
use ggmeval::tud::load_tud_dataset;
use ggmeval::{seed, DatasetStats, ExperimentSummary, GraphSet, SweepResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSource, RunConfig};
use crate::error::{CliError, Stage};

pub const SCHEMA_VERSION: u32 = 1;
/// Versions `plot` can read.
pub const KNOWN_SCHEMA_VERSIONS: &[u32] = &[1];

const RUN_STREAM: u64 = 0x52;
const SAMPLE_STREAM: u64 = 0x53;

/// One seeded repetition: its sample and one sweep per perturbation kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub run_seed: u64,
    pub sample_seed: u64,
    pub sample_size: usize,
    pub sweeps: Vec<SweepResult>,
}

/// Wall-clock durations in seconds. The only nondeterministic part of a report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub load_seconds: f64,
    pub run_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub config: RunConfig,
    /// Statistics of the filtered pool that runs sample from.
    pub dataset: DatasetStats,
    pub runs: Vec<RunRecord>,
    /// One entry per perturbation kind, in configuration order.
    pub summaries: Vec<ExperimentSummary>,
    pub timings: Timings,
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Io {
            stage: "write report",
            source: e.into(),
        })
    }

    /// Parse a report, rejecting schema versions this build does not know.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed report: {e}")))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CliError::Usage("report has no schema_version".into()))?;
        if !KNOWN_SCHEMA_VERSIONS.iter().any(|&v| u64::from(v) == version) {
            return Err(CliError::Usage(format!("unknown report schema_version {version}")));
        }
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("malformed report: {e}")))
    }

    /// Flat rows `(run, extractor, perturbation, metric, severity, raw,
    /// oriented, normalized)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Io {
            stage: "write csv",
            source: e.into(),
        };
        w.write_record([
            "run",
            "extractor",
            "perturbation",
            "metric",
            "severity",
            "raw",
            "oriented",
            "normalized",
        ])
        .map_err(io)?;
        for run in &self.runs {
            for sweep in &run.sweeps {
                for series in &sweep.metrics {
                    for (level, normalized) in sweep.levels.iter().zip(&series.normalized) {
                        let score = level.report.get(series.metric).ok_or_else(|| {
                            CliError::Usage(format!("report lacks {} at a level", series.metric))
                        })?;
                        w.write_record([
                            run.run.to_string(),
                            sweep.extractor.clone(),
                            sweep.perturbation.to_string(),
                            series.metric.to_string(),
                            level.severity.to_string(),
                            score.raw.to_string(),
                            score.oriented.to_string(),
                            normalized.to_string(),
                        ])
                        .map_err(io)?;
                    }
                }
            }
        }
        w.flush().stage("write csv")
    }
}

/// Load (or generate) the dataset and apply the node-count filter.
pub fn load_pool(cfg: &RunConfig) -> Result<GraphSet, CliError> {
    let raw = match cfg.dataset()? {
        DatasetSource::Tud { dir, name } => load_tud_dataset(dir, name).stage("load dataset")?,
        DatasetSource::Synthetic(spec) => spec.generate()?,
    };
    let (lo, hi) = cfg.size_bounds()?;
    filter_by_size(&raw, lo, hi).stage("filter dataset")
}

fn run_once(cfg: &RunConfig, pool: &GraphSet, run: usize) -> Result<(RunRecord, f64), CliError> {
    let started = Instant::now();
    let run_seed = seed::derive(cfg.master_seed, &[RUN_STREAM, run as u64]);
    let sample_seed = seed::derive(cfg.master_seed, &[SAMPLE_STREAM, run as u64]);
    // A pool smaller than the requested sample is used whole.
    let sample = if pool.len() > cfg.sample_size {
        sample_subset(pool, cfg.sample_size, sample_seed).stage("sample graphs")?
    } else {
        pool.clone()
    };
    let ctx = RunContext::new(&sample, &cfg.extractor, &cfg.suite(), run_seed).stage("fit extractor")?;
    let opts = cfg.sweep_options();
    let sweeps = cfg
        .perturbations
        .iter()
        .map(|&kind| ctx.sweep(kind, &opts).stage("sweep"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((
        RunRecord {
            run,
            run_seed,
            sample_seed,
            sample_size: sample.len(),
            sweeps,
        },
        started.elapsed().as_secs_f64(),
    ))
}

/// Execute every run and assemble the report. Runs go through the current
/// rayon pool; results do not depend on its size.
pub fn evaluate(cfg: &RunConfig) -> Result<ReportDocument, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let pool = load_pool(cfg)?;
    let dataset = pool.stats().stage("dataset statistics")?;
    let load_seconds = started.elapsed().as_secs_f64();

    let outcomes = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_once(cfg, &pool, r))
        .collect::<Result<Vec<_>, _>>()?;
    let (runs, run_seconds): (Vec<RunRecord>, Vec<f64>) = outcomes.into_iter().unzip();

    let summaries = (0..cfg.perturbations.len())
        .map(|p| {
            let sweeps: Vec<SweepResult> = runs.iter().map(|r| r.sweeps[p].clone()).collect();
            aggregate_runs(&sweeps).stage("aggregate runs")
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        dataset,
        runs,
        summaries,
        timings: Timings {
            load_seconds,
            run_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "results.csv";

/// Write `report.json` and `results.csv` into `dir`.
pub fn write_outputs(report: &ReportDocument, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).stage("create output directory")?;
    let json = report.to_json()?;
    std::fs::write(dir.join(REPORT_FILE), json + "\n").stage("write report")?;
    let file = std::fs::File::create(dir.join(CSV_FILE)).stage("write csv")?;
    report.write_csv(std::io::BufWriter::new(file))
}
