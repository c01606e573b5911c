//! Evaluation toolkit for graph generative models.
//!
//! A real graph set is degraded by controlled perturbations, every set is
//! embedded by a feature extractor, and distribution-comparison metrics are
//! scored by how monotonically they track the perturbation severity.
//!
//! Module map:
//! - [`graph`] and [`tud`]: graph data model, TUDataset I/O, structural statistics
//! - [`perturb`]: mixing, rewiring, mode collapse and mode dropping
//! - [`nn`]: dense matrices, message passing with hand-derived gradients, losses, Adam
//! - [`extract`]: statistics, random-GNN and graph-masked-autoencoder extractors
//! - [`metrics`]: Fréchet distance, MMD, precision/recall, density/coverage
//! - [`harness`]: severity sweeps, Spearman scoring and run aggregation

pub mod error;
pub mod extract;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod perturb;
pub mod seed;
pub mod tud;

pub use error::{Error, Result};
pub use extract::{EmbeddingSet, ExtractorConfig, FeatureSpec, GmaeConfig};
pub use graph::{DatasetStats, Graph, GraphSet, Provenance};
pub use harness::{ExperimentSummary, SweepOptions, SweepResult};
pub use matrix::DenseMatrix;
pub use metrics::{MetricKind, MetricReport, MetricSuite};
pub use perturb::{PerturbationKind, Severity};
