//! Severity sweeps and their scoring.
//!
//! A run fits the extractor once on the real set, embeds the real set once,
//! then for every severity level perturbs, embeds with the frozen extractor
//! and evaluates every metric against the real embeddings. Each metric's
//! series is scored by its Spearman correlation with the severity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{EmbeddingSet, ExtractorConfig, FittedExtractor};
use crate::graph::GraphSet;
use crate::metrics::{MetricKind, MetricReport, MetricSuite, Orientation, PreparedReference};
use crate::perturb::{
    cluster_graphs, mix_random_with, mode_collapse, mode_drop, rewire_edges, sweep_levels,
    ClusterAssignment, MixingSource, PerturbationKind, Severity,
};
use crate::seed;

const EXTRACTOR_STREAM: u64 = 0xE7;
const CLUSTER_STREAM: u64 = 0xC1;

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share rank mean((i+1)..=(j+1)).
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties. A constant `ys`
/// gives 0.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::arg(format!(
            "spearman over series of length {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::arg("spearman needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("spearman over non-finite values".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) {
        return Err(Error::arg("spearman with a constant independent variable"));
    }
    if constant(ys) {
        return Ok(0.0);
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

/// Orient (similarities become `1 − min(v, 1)`) and min-max scale to `[0, 1]`.
/// Constant series map to zeros.
pub fn normalize_scores(series: &[f64], orientation: Orientation) -> Vec<f64> {
    let oriented: Vec<f64> = series.iter().map(|&v| orientation.orient(v)).collect();
    let lo = oriented.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = oriented.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![0.0; oriented.len()];
    }
    oriented.iter().map(|v| (v - lo) / span).collect()
}

/// Sweep parameters beyond the extractor and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Severity grid step for mixing and rewiring.
    pub step: f64,
    /// Number of k-medoids clusters for the mode kinds.
    pub clusters: usize,
    pub mixing_source: MixingSource,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            clusters: 10,
            mixing_source: MixingSource::MatchDensity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub severity: f64,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric: MetricKind,
    pub spearman: f64,
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub run_seed: u64,
    pub extractor: String,
    pub fingerprint: String,
    pub perturbation: PerturbationKind,
    pub levels: Vec<LevelResult>,
    pub metrics: Vec<MetricSeries>,
    pub rbf_sigma: Option<f64>,
    pub training_losses: Option<Vec<f64>>,
}

impl SweepResult {
    pub fn severities(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.severity).collect()
    }

    /// Raw scores of one metric across levels.
    pub fn raw_series(&self, metric: MetricKind) -> Option<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| l.report.get(metric).map(|s| s.raw))
            .collect()
    }

    pub fn oriented_series(&self, metric: MetricKind) -> Option<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| l.report.get(metric).map(|s| s.oriented))
            .collect()
    }

    pub fn spearman_of(&self, metric: MetricKind) -> Option<f64> {
        self.metrics.iter().find(|m| m.metric == metric).map(|m| m.spearman)
    }
}

/// Everything a run computes once before sweeping: the fitted extractor, the
/// real embeddings, the prepared metric reference and (lazily) clusters.
pub struct RunContext<'a> {
    real: &'a GraphSet,
    run_seed: u64,
    extractor: FittedExtractor,
    extractor_tag: String,
    real_embedding: EmbeddingSet,
    reference: PreparedReference,
    suite: MetricSuite,
    clusters: std::sync::OnceLock<(usize, ClusterAssignment)>,
}

impl<'a> RunContext<'a> {
    pub fn new(
        real: &'a GraphSet,
        extractor: &ExtractorConfig,
        suite: &MetricSuite,
        run_seed: u64,
    ) -> Result<Self> {
        if real.is_empty() {
            return Err(Error::EmptyDataset("real graph set is empty".into()));
        }
        let fitted = extractor.fit(real, seed::derive(run_seed, &[EXTRACTOR_STREAM]))?;
        let real_embedding = fitted.embed(real)?;
        let reference = suite.prepare(&real_embedding)?;
        Ok(Self {
            real,
            run_seed,
            extractor: fitted,
            extractor_tag: extractor.tag().to_string(),
            real_embedding,
            reference,
            suite: suite.clone(),
            clusters: std::sync::OnceLock::new(),
        })
    }

    pub fn real_embedding(&self) -> &EmbeddingSet {
        &self.real_embedding
    }

    pub fn extractor(&self) -> &FittedExtractor {
        &self.extractor
    }

    fn clusters(&self, k: usize) -> Result<&ClusterAssignment> {
        if let Some((cached_k, c)) = self.clusters.get() {
            if *cached_k == k {
                return Ok(c);
            }
            return Err(Error::Config("cluster count changed within a run".into()));
        }
        let c = cluster_graphs(self.real, k, seed::derive(self.run_seed, &[CLUSTER_STREAM]))?;
        Ok(&self.clusters.get_or_init(|| (k, c)).1)
    }

    /// Perturbation levels of a sweep as `(severity, amount)`; `amount` is the
    /// severity for grid kinds and the cluster count for mode kinds.
    fn levels(&self, kind: PerturbationKind, opts: &SweepOptions) -> Result<Vec<(f64, f64)>> {
        match kind {
            PerturbationKind::MixingRandom | PerturbationKind::RewiringEdges => Ok(sweep_levels(opts.step)?
                .into_iter()
                .map(|t| (t.value(), t.value()))
                .collect()),
            PerturbationKind::ModeCollapse => {
                let k = opts.clusters;
                Ok((0..=k).map(|c| (c as f64 / k as f64, c as f64)).collect())
            }
            PerturbationKind::ModeDropping => {
                // Dropping every cluster leaves nothing to sample from, so the
                // counts 0..k-1 are spread over [0, 1].
                let k = opts.clusters;
                if k < 2 {
                    return Err(Error::Config(
                        "mode dropping needs at least 2 clusters".into(),
                    ));
                }
                Ok((0..k).map(|c| (c as f64 / (k - 1) as f64, c as f64)).collect())
            }
        }
    }

    fn perturb(
        &self,
        kind: PerturbationKind,
        amount: f64,
        level_seed: u64,
        opts: &SweepOptions,
    ) -> Result<GraphSet> {
        match kind {
            PerturbationKind::MixingRandom => {
                mix_random_with(self.real, Severity::new(amount)?, level_seed, opts.mixing_source)
            }
            PerturbationKind::RewiringEdges => rewire_edges(self.real, Severity::new(amount)?, level_seed),
            PerturbationKind::ModeCollapse => {
                mode_collapse(self.real, self.clusters(opts.clusters)?, amount as usize, level_seed)
            }
            PerturbationKind::ModeDropping => {
                mode_drop(self.real, self.clusters(opts.clusters)?, amount as usize, level_seed)
            }
        }
    }

    pub fn sweep(&self, kind: PerturbationKind, opts: &SweepOptions) -> Result<SweepResult> {
        if kind.is_mode() {
            if opts.clusters == 0 || opts.clusters > self.real.len() {
                return Err(Error::Config(format!(
                    "{} clusters requested for {} graphs",
                    opts.clusters,
                    self.real.len()
                )));
            }
            self.clusters(opts.clusters)?;
        }
        let levels = self.levels(kind, opts)?;
        let evaluated = levels
            .par_iter()
            .enumerate()
            .map(|(i, &(severity, amount))| {
                let level_seed = seed::derive(self.run_seed, &[kind.tag(), i as u64]);
                let report = self
                    .perturb(kind, amount, level_seed, opts)
                    .and_then(|set| self.extractor.embed(&set))
                    .and_then(|emb| self.reference.evaluate(&emb))
                    .map_err(|e| {
                        Error::Config(format!("{kind} level {i} (t = {severity}): {e}"))
                    })?;
                Ok(LevelResult { severity, report })
            })
            .collect::<Result<Vec<_>>>()?;

        let ts: Vec<f64> = evaluated.iter().map(|l| l.severity).collect();
        let mut metrics = Vec::with_capacity(self.suite.metrics.len());
        for &metric in &self.suite.metrics {
            let score = |l: &LevelResult| {
                l.report
                    .get(metric)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("metric {metric} missing from a level")))
            };
            let scores = evaluated.iter().map(score).collect::<Result<Vec<_>>>()?;
            let raw: Vec<f64> = scores.iter().map(|s| s.raw).collect();
            let oriented: Vec<f64> = scores.iter().map(|s| s.oriented).collect();
            metrics.push(MetricSeries {
                metric,
                spearman: spearman(&ts, &oriented)?,
                normalized: normalize_scores(&raw, metric.orientation()),
            });
        }
        Ok(SweepResult {
            run_seed: self.run_seed,
            extractor: self.extractor_tag.clone(),
            fingerprint: self.real_embedding.fingerprint.clone(),
            perturbation: kind,
            levels: evaluated,
            metrics,
            rbf_sigma: self.reference.rbf_sigma(),
            training_losses: self.extractor.training_losses().map(<[f64]>::to_vec),
        })
    }
}

/// Fit, embed and sweep one perturbation kind.
pub fn run_sweep(
    real_set: &GraphSet,
    kind: PerturbationKind,
    extractor: &ExtractorConfig,
    suite: &MetricSuite,
    opts: &SweepOptions,
    run_seed: u64,
) -> Result<SweepResult> {
    RunContext::new(real_set, extractor, suite, run_seed)?.sweep(kind, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: MetricKind,
    /// One Spearman value per run, in run order.
    pub spearman: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Spearman distribution across runs for one extractor and perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub extractor: String,
    pub perturbation: PerturbationKind,
    pub metrics: Vec<MetricSummary>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn aggregate_runs(results: &[SweepResult]) -> Result<ExperimentSummary> {
    let first = results
        .first()
        .ok_or_else(|| Error::arg("no sweep results to aggregate"))?;
    let metric_list: Vec<MetricKind> = first.metrics.iter().map(|m| m.metric).collect();
    for r in results {
        let ms: Vec<MetricKind> = r.metrics.iter().map(|m| m.metric).collect();
        if r.extractor != first.extractor || r.perturbation != first.perturbation || ms != metric_list {
            return Err(Error::arg(format!(
                "cannot aggregate {}/{} with {}/{}",
                first.extractor, first.perturbation, r.extractor, r.perturbation
            )));
        }
    }
    let metrics = metric_list
        .iter()
        .enumerate()
        .map(|(i, &metric)| {
            let values: Vec<f64> = results.iter().map(|r| r.metrics[i].spearman).collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let q1 = quantile(&sorted, 0.25);
            let q3 = quantile(&sorted, 0.75);
            MetricSummary {
                metric,
                median: quantile(&sorted, 0.5),
                q1,
                q3,
                iqr: q3 - q1,
                spearman: values,
            }
        })
        .collect();
    Ok(ExperimentSummary {
        extractor: first.extractor.clone(),
        perturbation: first.perturbation,
        metrics,
    })
}
