//! Run configuration: defaults, JSON config files and dataset presets.

use std::path::PathBuf;

use ggmeval::graph::{erdos_renyi, GraphSet};
use ggmeval::metrics::{KnnConfig, SigmaPolicy};
use ggmeval::perturb::MixingSource;
use ggmeval::{seed, ExtractorConfig, MetricKind, MetricSuite, PerturbationKind, SweepOptions};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Node-count bounds applied before sampling.
pub const PROTEINS_MIN_NODES: usize = 20;
pub const DEFAULT_MIN_NODES: usize = 3;
pub const DEFAULT_MAX_NODES: usize = 1000;

/// `(min_nodes, max_nodes)` preset for a dataset name.
pub fn preset_bounds(name: &str) -> (usize, usize) {
    if name.eq_ignore_ascii_case("PROTEINS") || name.to_ascii_uppercase().starts_with("PROTEINS_") {
        (PROTEINS_MIN_NODES, DEFAULT_MAX_NODES)
    } else {
        (DEFAULT_MIN_NODES, DEFAULT_MAX_NODES)
    }
}

/// Erdős–Rényi corpus parameters; node count and edge probability are drawn
/// uniformly per graph from the inclusive ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_edge_prob: f64,
    pub max_edge_prob: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_graphs: 200,
            min_nodes: 30,
            max_nodes: 30,
            min_edge_prob: 0.1,
            max_edge_prob: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_graphs == 0 {
            return Err(CliError::Usage("synthetic corpus needs at least one graph".into()));
        }
        if self.min_nodes == 0 || self.min_nodes > self.max_nodes {
            return Err(CliError::Usage(format!(
                "invalid node range [{}, {}]",
                self.min_nodes, self.max_nodes
            )));
        }
        let valid = |p: f64| (0.0..=1.0).contains(&p);
        if !valid(self.min_edge_prob) || !valid(self.max_edge_prob) || self.min_edge_prob > self.max_edge_prob {
            return Err(CliError::Usage(format!(
                "invalid edge probability range [{}, {}]",
                self.min_edge_prob, self.max_edge_prob
            )));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<GraphSet, CliError> {
        self.validate()?;
        let mut rng = seed::rng(self.seed);
        let mut graphs = Vec::with_capacity(self.n_graphs);
        for id in 0..self.n_graphs {
            let n = rng.gen_range(self.min_nodes..=self.max_nodes);
            let p = if self.min_edge_prob == self.max_edge_prob {
                self.min_edge_prob
            } else {
                rng.gen_range(self.min_edge_prob..=self.max_edge_prob)
            };
            let mut g = erdos_renyi(n, p, rng.gen()).map_err(|e| CliError::Usage(e.to_string()))?;
            g.id = id;
            graphs.push(g);
        }
        Ok(GraphSet::real(graphs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DatasetSource {
    Tud { dir: PathBuf, name: String },
    Synthetic(SynthSpec),
}

impl DatasetSource {
    pub fn name(&self) -> &str {
        match self {
            DatasetSource::Tud { name, .. } => name,
            DatasetSource::Synthetic(_) => "synthetic",
        }
    }
}

/// Everything `evaluate` needs. Every field but `dataset` has a default, so a
/// config file may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<DatasetSource>,
    /// `None` uses the dataset preset.
    pub min_nodes: Option<usize>,
    pub max_nodes: Option<usize>,
    pub sample_size: usize,
    pub extractor: ExtractorConfig,
    pub perturbations: Vec<PerturbationKind>,
    pub metrics: Vec<MetricKind>,
    pub step: f64,
    pub runs: usize,
    pub clusters: usize,
    pub knn_k: usize,
    pub rbf_sigma: SigmaPolicy,
    pub mixing_source: MixingSource,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            min_nodes: None,
            max_nodes: None,
            sample_size: 1000,
            extractor: ExtractorConfig::gmae_default(),
            perturbations: PerturbationKind::ALL.to_vec(),
            metrics: MetricKind::ALL.to_vec(),
            step: 0.01,
            runs: 5,
            clusters: 10,
            knn_k: 5,
            rbf_sigma: SigmaPolicy::Median,
            mixing_source: MixingSource::MatchDensity,
            master_seed: 0,
            out_dir: PathBuf::from("ggmeval-out"),
        }
    }
}

fn unique<T: PartialEq + std::fmt::Display>(items: &[T], what: &str) -> Result<(), CliError> {
    if items.is_empty() {
        return Err(CliError::Usage(format!("no {what} selected")));
    }
    for (i, a) in items.iter().enumerate() {
        if items[..i].contains(a) {
            return Err(CliError::Usage(format!("{what} {a} listed twice")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    pub fn dataset(&self) -> Result<&DatasetSource, CliError> {
        self.dataset
            .as_ref()
            .ok_or_else(|| CliError::Usage("no dataset given (--dataset-dir and --dataset-name)".into()))
    }

    /// Node-count filter after applying presets.
    pub fn size_bounds(&self) -> Result<(usize, usize), CliError> {
        let (lo, hi) = preset_bounds(self.dataset()?.name());
        Ok((self.min_nodes.unwrap_or(lo), self.max_nodes.unwrap_or(hi)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let DatasetSource::Synthetic(spec) = self.dataset()? {
            spec.validate()?;
        }
        let (lo, hi) = self.size_bounds()?;
        if lo == 0 || lo > hi {
            return usage(format!("invalid node-count filter [{lo}, {hi}]"));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return usage(format!("step {} outside (0, 1]", self.step));
        }
        if self.runs == 0 {
            return usage("runs must be at least 1".into());
        }
        if self.sample_size == 0 {
            return usage("sample size must be at least 1".into());
        }
        unique(&self.perturbations, "perturbation")?;
        unique(&self.metrics, "metric")?;
        if self.perturbations.iter().any(|k| k.is_mode()) && self.clusters < 2 {
            return usage(format!("{} clusters; mode perturbations need at least 2", self.clusters));
        }
        if let ExtractorConfig::Gmae { config, .. } = &self.extractor {
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.suite().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if let MixingSource::Fixed(p) = self.mixing_source {
            if !(0.0..=1.0).contains(&p) {
                return usage(format!("mixing edge probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn suite(&self) -> MetricSuite {
        MetricSuite {
            metrics: self.metrics.clone(),
            knn: KnnConfig { k: self.knn_k },
            rbf_sigma: self.rbf_sigma,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            step: self.step,
            clusters: self.clusters,
            mixing_source: self.mixing_source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(preset_bounds("PROTEINS"), (20, 1000));
        assert_eq!(preset_bounds("proteins"), (20, 1000));
        assert_eq!(preset_bounds("DBLP_v1"), (3, 1000));
        assert_eq!(preset_bounds("REDDIT-MULTI-5K"), (3, 1000));
    }

    #[test]
    fn partial_config_file_fills_defaults() {
        let cfg = RunConfig::from_json(
            r#"{"dataset": {"type": "tud", "dir": "d", "name": "PROTEINS"}, "runs": 2,
                "extractor": {"type": "stats"}, "metrics": ["fd", "coverage"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.runs, 2);
        assert_eq!(cfg.step, 0.01);
        assert_eq!(cfg.metrics, vec![MetricKind::Fd, MetricKind::Coverage]);
        assert_eq!(cfg.size_bounds().unwrap(), (20, 1000));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_metric_and_fields_are_usage_errors() {
        assert!(matches!(
            RunConfig::from_json(r#"{"metrics": ["fd", "psnr"]}"#),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(RunConfig::from_json(r#"{"stepp": 0.1}"#), Err(CliError::Usage(_))));
    }

    #[test]
    fn validation() {
        let base = RunConfig {
            dataset: Some(DatasetSource::Synthetic(SynthSpec::default())),
            ..RunConfig::default()
        };
        base.validate().unwrap();
        for bad in [
            RunConfig { step: 0.0, ..base.clone() },
            RunConfig { step: 1.5, ..base.clone() },
            RunConfig { runs: 0, ..base.clone() },
            RunConfig { metrics: vec![MetricKind::Fd, MetricKind::Fd], ..base.clone() },
            RunConfig { knn_k: 0, ..base.clone() },
            RunConfig { dataset: None, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(CliError::Usage(_))), "{bad:?}");
        }
    }

    #[test]
    fn synthetic_corpus_is_seeded() {
        let spec = SynthSpec { n_graphs: 10, min_nodes: 5, max_nodes: 5, min_edge_prob: 1.0, max_edge_prob: 1.0, seed: 3 };
        let set = spec.generate().unwrap();
        assert_eq!(set.len(), 10);
        assert!(set.iter().all(|g| g.num_nodes() == 5 && g.num_edges() == 10));
        let mixed = SynthSpec { n_graphs: 20, min_nodes: 4, max_nodes: 9, min_edge_prob: 0.1, max_edge_prob: 0.6, seed: 3 };
        assert_eq!(mixed.generate().unwrap(), mixed.generate().unwrap());
    }
}
