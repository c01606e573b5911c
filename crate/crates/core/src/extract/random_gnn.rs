use crate::error::{Error, Result};
use crate::graph::GraphSet;
use crate::nn::{Activation, MessagePassingLayer};
use crate::seed;

use super::{embed_with_layers, EmbeddingSet};

/// Untrained stacked message-passing encoder with seeded weights. The same
/// weights embed every graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGnn {
    layers: Vec<MessagePassingLayer>,
    fingerprint: String,
}

impl RandomGnn {
    pub fn new(in_dim: usize, hidden_dim: usize, num_layers: usize, seed: u64) -> Result<Self> {
        if num_layers == 0 || hidden_dim == 0 || in_dim == 0 {
            return Err(Error::arg(format!(
                "random GNN needs positive sizes, got in {in_dim}, hidden {hidden_dim}, layers {num_layers}"
            )));
        }
        let mut rng = seed::rng(seed);
        let layers = (0..num_layers)
            .map(|l| {
                let d_in = if l == 0 { in_dim } else { hidden_dim };
                MessagePassingLayer::init_uniform(d_in, hidden_dim, Activation::Relu, &mut rng)
            })
            .collect();
        Ok(Self {
            layers,
            fingerprint: format!("random-gnn:in{in_dim}:h{hidden_dim}:l{num_layers}:s{seed}"),
        })
    }

    /// Wrap hand-built layers.
    pub fn from_layers(layers: Vec<MessagePassingLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::arg("random GNN needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            fingerprint: "random-gnn:custom".into(),
        })
    }

    pub fn layers(&self) -> &[MessagePassingLayer] {
        &self.layers
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers.iter().map(MessagePassingLayer::out_dim).sum()
    }

    /// Requires node features already attached.
    pub fn embed(&self, set: &GraphSet) -> Result<EmbeddingSet> {
        embed_with_layers(&self.layers, set, "random-gnn", self.fingerprint.clone())
    }
}

pub fn extract_random_gnn(
    set: &GraphSet,
    hidden_dim: usize,
    num_layers: usize,
    seed: u64,
) -> Result<EmbeddingSet> {
    let in_dim = set
        .graphs
        .first()
        .and_then(|g| g.node_features())
        .map(|x| x.cols())
        .ok_or_else(|| Error::Precondition("random GNN needs node features attached".into()))?;
    RandomGnn::new(in_dim, hidden_dim, num_layers, seed)?.embed(set)
}
