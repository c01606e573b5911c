//! Graph-level feature extractors.
//!
//! Three ways to turn a [`GraphSet`] into an [`EmbeddingSet`]:
//! - [`extract_statistics`]: degree and clustering-coefficient histograms
//! - [`extract_random_gnn`]: untrained message-passing network
//! - [`train_gmae`] and [`extract_gmae`]: message-passing encoder trained as a graph masked autoencoder
//!
//! The two network extractors share the encoder and readout (concatenated
//! mean pools of every layer), so they differ only in their weights.

mod gmae;
mod random_gnn;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_descriptor, Graph, GraphSet, DEFAULT_CC_BINS, DEFAULT_DEGREE_BINS};
use crate::matrix::DenseMatrix;
use crate::nn::{mean_pool, MessagePassingLayer};

pub use gmae::{extract_gmae, train_gmae, GmaeConfig, GmaeModel, GmaeTraining, MaskBranch};
pub use random_gnn::{extract_random_gnn, RandomGnn};

/// Default one-hot cap for degree features (degrees ≥ cap share the last slot).
pub const DEFAULT_DEGREE_CAP: usize = 63;

/// One row per graph, aligned with the input set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub matrix: DenseMatrix,
    pub extractor: String,
    pub fingerprint: String,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Untagged embedding from raw rows; handy for metric computations.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Ok(Self {
            matrix: DenseMatrix::from_rows(rows)?,
            extractor: "raw".into(),
            fingerprint: String::new(),
        })
    }
}

/// Node input features for the network extractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSpec {
    NodeLabelOneHot { num_classes: usize },
    DegreeOneHot { cap: usize },
}

impl FeatureSpec {
    pub fn dim(self) -> usize {
        match self {
            FeatureSpec::NodeLabelOneHot { num_classes } => num_classes,
            FeatureSpec::DegreeOneHot { cap } => cap + 1,
        }
    }
}

/// How to pick a [`FeatureSpec`] for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturePolicy {
    /// Node labels when every graph has them, degree one-hot otherwise.
    #[default]
    Auto,
    Labels,
    Degree { cap: usize },
}

impl FeaturePolicy {
    pub fn resolve(self, set: &GraphSet) -> Result<FeatureSpec> {
        let labeled = !set.is_empty() && set.iter().all(|g| g.node_labels().is_some());
        match self {
            FeaturePolicy::Degree { cap } => Ok(FeatureSpec::DegreeOneHot { cap }),
            FeaturePolicy::Auto if !labeled => Ok(FeatureSpec::DegreeOneHot {
                cap: DEFAULT_DEGREE_CAP,
            }),
            FeaturePolicy::Auto | FeaturePolicy::Labels => {
                if !labeled {
                    return Err(Error::Precondition(
                        "label features requested but some graphs have no node labels".into(),
                    ));
                }
                let mut max = 0;
                for l in set.iter().flat_map(|g| g.node_labels().unwrap_or(&[]).iter()) {
                    if *l < 0 {
                        return Err(Error::Data(format!("negative node label {l}")));
                    }
                    max = max.max(*l);
                }
                Ok(FeatureSpec::NodeLabelOneHot {
                    num_classes: max as usize + 1,
                })
            }
        }
    }
}

/// Populate node features as one-hot vectors of uniform dimension.
pub fn attach_features(set: &GraphSet, spec: FeatureSpec) -> Result<GraphSet> {
    if let FeatureSpec::DegreeOneHot { cap: 0 } = spec {
        return Err(Error::arg("degree one-hot cap must be at least 1"));
    }
    let graphs = set
        .iter()
        .map(|g| {
            let x = node_features(g, spec)?;
            g.clone().with_features(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphSet {
        graphs,
        provenance: set.provenance,
    })
}

fn node_features(g: &Graph, spec: FeatureSpec) -> Result<DenseMatrix> {
    let mut x = DenseMatrix::zeros(g.num_nodes(), spec.dim());
    match spec {
        FeatureSpec::DegreeOneHot { cap } => {
            for (i, d) in g.degrees().into_iter().enumerate() {
                x[(i, d.min(cap))] = 1.0;
            }
        }
        FeatureSpec::NodeLabelOneHot { num_classes } => {
            let labels = g.node_labels().ok_or_else(|| {
                Error::Precondition(format!("graph {} has no node labels", g.id))
            })?;
            for (i, &l) in labels.iter().enumerate() {
                if l < 0 || l as usize >= num_classes {
                    return Err(Error::Data(format!(
                        "graph {}: node label {l} outside 0..{num_classes}",
                        g.id
                    )));
                }
                x[(i, l as usize)] = 1.0;
            }
        }
    }
    Ok(x)
}

/// Row `i` is the default descriptor of graph `i`.
pub fn extract_statistics(set: &GraphSet) -> Result<EmbeddingSet> {
    if set.is_empty() {
        return Err(Error::EmptyDataset("nothing to embed".into()));
    }
    let rows = set
        .graphs
        .par_iter()
        .map(|g| graph_descriptor(g, DEFAULT_DEGREE_BINS, DEFAULT_CC_BINS))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingSet {
        matrix: DenseMatrix::from_rows(&rows)?,
        extractor: "stats".into(),
        fingerprint: format!("stats:deg{DEFAULT_DEGREE_BINS}:cc{DEFAULT_CC_BINS}"),
    })
}

fn features_of(g: &Graph) -> Result<&DenseMatrix> {
    g.node_features()
        .ok_or_else(|| Error::Precondition(format!("graph {} has no node features", g.id)))
}

/// Outputs of every layer of a stacked encoder.
pub(crate) fn encode_layers(
    layers: &[MessagePassingLayer],
    edges: &[(usize, usize)],
    x: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    let mut outs: Vec<DenseMatrix> = Vec::with_capacity(layers.len());
    for layer in layers {
        let h = layer.forward(edges, outs.last().unwrap_or(x))?;
        outs.push(h);
    }
    Ok(outs)
}

/// Concatenated mean pools of every encoder layer.
pub(crate) fn readout(layers: &[MessagePassingLayer], g: &Graph) -> Result<Vec<f64>> {
    let x = features_of(g)?;
    let mut emb = Vec::new();
    for h in encode_layers(layers, g.edges(), x)? {
        emb.extend(mean_pool(&h)?);
    }
    Ok(emb)
}

pub(crate) fn embed_with_layers(
    layers: &[MessagePassingLayer],
    set: &GraphSet,
    extractor: &str,
    fingerprint: String,
) -> Result<EmbeddingSet> {
    if set.is_empty() {
        return Err(Error::EmptyDataset("nothing to embed".into()));
    }
    let in_dim = layers.first().map_or(0, MessagePassingLayer::in_dim);
    for g in set.iter() {
        let x = features_of(g)?;
        if x.cols() != in_dim {
            return Err(Error::Config(format!(
                "graph {} has {}-dim features, encoder expects {in_dim}",
                g.id,
                x.cols()
            )));
        }
    }
    let rows = set
        .graphs
        .par_iter()
        .map(|g| readout(layers, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingSet {
        matrix: DenseMatrix::from_rows(&rows)?,
        extractor: extractor.into(),
        fingerprint,
    })
}

/// Which extractor a sweep uses, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ExtractorConfig {
    Stats,
    RandomGnn {
        hidden_dim: usize,
        num_layers: usize,
        #[serde(default)]
        features: FeaturePolicy,
    },
    Gmae {
        config: GmaeConfig,
        #[serde(default)]
        features: FeaturePolicy,
    },
}

impl ExtractorConfig {
    pub fn random_gnn_default() -> Self {
        ExtractorConfig::RandomGnn {
            hidden_dim: 32,
            num_layers: 2,
            features: FeaturePolicy::Auto,
        }
    }

    pub fn gmae_default() -> Self {
        ExtractorConfig::Gmae {
            config: GmaeConfig::default(),
            features: FeaturePolicy::Auto,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ExtractorConfig::Stats => "stats",
            ExtractorConfig::RandomGnn { .. } => "random-gnn",
            ExtractorConfig::Gmae { .. } => "gmae",
        }
    }

    /// Initialize (random GNN) or train (GMAE) on the real set only.
    pub fn fit(&self, real: &GraphSet, seed: u64) -> Result<FittedExtractor> {
        match self {
            ExtractorConfig::Stats => Ok(FittedExtractor::Stats),
            ExtractorConfig::RandomGnn {
                hidden_dim,
                num_layers,
                features,
            } => {
                let spec = features.resolve(real)?;
                let gnn = RandomGnn::new(spec.dim(), *hidden_dim, *num_layers, seed)?;
                Ok(FittedExtractor::RandomGnn { gnn, spec })
            }
            ExtractorConfig::Gmae { config, features } => {
                let spec = features.resolve(real)?;
                let cfg = GmaeConfig {
                    seed,
                    ..config.clone()
                };
                let training = train_gmae(&attach_features(real, spec)?, &cfg)?;
                Ok(FittedExtractor::Gmae {
                    training: Box::new(training),
                    spec,
                })
            }
        }
    }
}

/// An extractor with frozen weights, ready to embed any set.
#[derive(Debug, Clone)]
pub enum FittedExtractor {
    Stats,
    RandomGnn { gnn: RandomGnn, spec: FeatureSpec },
    Gmae { training: Box<GmaeTraining>, spec: FeatureSpec },
}

impl FittedExtractor {
    /// Attaches the extractor's node features (recomputed per graph, since
    /// perturbations change degrees) and embeds.
    pub fn embed(&self, set: &GraphSet) -> Result<EmbeddingSet> {
        match self {
            FittedExtractor::Stats => extract_statistics(set),
            FittedExtractor::RandomGnn { gnn, spec } => gnn.embed(&attach_features(set, *spec)?),
            FittedExtractor::Gmae { training, spec } => {
                extract_gmae(&training.model, &attach_features(set, *spec)?)
            }
        }
    }

    /// Per-epoch mean training loss, for trained extractors.
    pub fn training_losses(&self) -> Option<&[f64]> {
        match self {
            FittedExtractor::Gmae { training, .. } => Some(&training.epoch_losses),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::new(0, 3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn degree_one_hot() {
        let set = GraphSet::real(vec![triangle()]);
        let out = attach_features(&set, FeatureSpec::DegreeOneHot { cap: 4 }).unwrap();
        let x = out.graphs[0].node_features().unwrap();
        assert_eq!(x.shape(), (3, 5));
        for i in 0..3 {
            assert_eq!(x.row(i), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn degree_one_hot_clips_at_cap() {
        let star = Graph::new(0, 101, (1..101).map(|i| (0, i)).collect()).unwrap();
        let out = attach_features(&GraphSet::real(vec![star]), FeatureSpec::DegreeOneHot { cap: 63 })
            .unwrap();
        let x = out.graphs[0].node_features().unwrap();
        assert_eq!(x.cols(), 64);
        assert_eq!(x[(0, 63)], 1.0);
        assert_eq!(x[(1, 1)], 1.0);
    }

    #[test]
    fn label_one_hot_and_errors() {
        let g = triangle().with_labels(vec![0, 1, 1]).unwrap();
        let set = GraphSet::real(vec![g]);
        let spec = FeaturePolicy::Auto.resolve(&set).unwrap();
        assert_eq!(spec, FeatureSpec::NodeLabelOneHot { num_classes: 2 });
        let x = attach_features(&set, spec).unwrap().graphs[0].node_features().unwrap().clone();
        assert_eq!(x.row(0), &[1.0, 0.0]);
        assert_eq!(x.row(2), &[0.0, 1.0]);
        assert!(matches!(
            attach_features(&set, FeatureSpec::NodeLabelOneHot { num_classes: 1 }),
            Err(Error::Data(_))
        ));
        let unlabeled = GraphSet::real(vec![triangle()]);
        assert!(attach_features(&unlabeled, FeatureSpec::NodeLabelOneHot { num_classes: 2 }).is_err());
        assert!(FeaturePolicy::Labels.resolve(&unlabeled).is_err());
        assert_eq!(
            FeaturePolicy::Auto.resolve(&unlabeled).unwrap(),
            FeatureSpec::DegreeOneHot { cap: 63 }
        );
    }

    #[test]
    fn statistics_rows() {
        let g = triangle();
        let relabeled = g.permuted(&[2, 0, 1]).unwrap();
        let set = GraphSet::real(vec![g, relabeled]);
        let e = extract_statistics(&set).unwrap();
        assert_eq!(e.dim(), 74);
        assert_eq!(e.matrix.row(0), e.matrix.row(1));
        assert_eq!(e, extract_statistics(&set).unwrap());
        assert!(extract_statistics(&GraphSet::real(vec![])).is_err());
    }
}
