//! Graph data model, dataset filtering/sampling, Erdős–Rényi generation and
//! per-graph structural statistics.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::perturb::PerturbationKind;
use crate::seed;

/// Degree histogram width used by the statistics extractor and clustering.
pub const DEFAULT_DEGREE_BINS: usize = 64;
/// Clustering-coefficient histogram width used by default.
pub const DEFAULT_CC_BINS: usize = 10;

/// A simple undirected graph.
///
/// Edges are stored once each as `(u, v)` with `u < v`. Construction through
/// [`Graph::new`] enforces the simple-graph invariants, so every `Graph`
/// value in the crate is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub id: usize,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_features: Option<DenseMatrix>,
    node_labels: Option<Vec<i64>>,
}

impl Graph {
    /// Validating constructor. Pairs may be given in either orientation.
    pub fn new(id: usize, num_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::arg(format!("graph {id} has no nodes")));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::arg(format!(
                    "graph {id}: edge ({a}, {b}) outside {num_nodes} nodes"
                )));
            }
            if a == b {
                return Err(Error::arg(format!("graph {id}: self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::arg(format!("graph {id}: duplicate edge {e:?}")));
            }
            normalized.push(e);
        }
        Ok(Self {
            id,
            num_nodes,
            edges: normalized,
            node_features: None,
            node_labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::arg(format!(
                "graph {}: {} labels for {} nodes",
                self.id,
                labels.len(),
                self.num_nodes
            )));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn with_features(mut self, features: DenseMatrix) -> Result<Self> {
        if features.rows() != self.num_nodes {
            return Err(Error::shape(format!(
                "graph {}: feature matrix has {} rows for {} nodes",
                self.id,
                features.rows(),
                self.num_nodes
            )));
        }
        self.node_features = Some(features);
        Ok(self)
    }

    pub fn without_features(mut self) -> Self {
        self.node_features = None;
        self
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_features(&self) -> Option<&DenseMatrix> {
        self.node_features.as_ref()
    }

    pub fn node_labels(&self) -> Option<&[i64]> {
        self.node_labels.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for n in &mut adj {
            n.sort_unstable();
        }
        adj
    }

    /// Relabel nodes: node `i` becomes `perm[i]`. Labels and features follow
    /// their nodes.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes;
        let mut check = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut check[p], true)) {
            return Err(Error::arg("permutation is not a bijection on the node set"));
        }
        let edges = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let mut g = Graph::new(self.id, n, edges)?;
        if let Some(labels) = &self.node_labels {
            let mut out = vec![0; n];
            for (i, &l) in labels.iter().enumerate() {
                out[perm[i]] = l;
            }
            g.node_labels = Some(out);
        }
        if let Some(x) = &self.node_features {
            let mut out = DenseMatrix::zeros(n, x.cols());
            for (i, &p) in perm.iter().enumerate() {
                out.row_mut(p).copy_from_slice(x.row(i));
            }
            g.node_features = Some(out);
        }
        Ok(g)
    }
}

/// Where a graph set came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Real,
    Perturbed { kind: PerturbationKind, severity: f64 },
}

/// Ordered collection of graphs. Order is significant: cluster assignments,
/// replacements and embedding rows are all index-aligned with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSet {
    pub graphs: Vec<Graph>,
    pub provenance: Provenance,
}

impl GraphSet {
    pub fn real(graphs: Vec<Graph>) -> Self {
        Self {
            graphs,
            provenance: Provenance::Real,
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Graph> {
        self.graphs.iter()
    }

    pub fn stats(&self) -> Result<DatasetStats> {
        DatasetStats::of(self)
    }
}

/// Summary table of node and edge counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_graphs: usize,
    pub mean_nodes: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub mean_edges: f64,
    pub min_edges: usize,
    pub max_edges: usize,
}

impl DatasetStats {
    pub fn of(set: &GraphSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyDataset("no graphs to summarize".into()));
        }
        let n = set.len() as f64;
        let nodes = set.iter().map(Graph::num_nodes);
        let edges = set.iter().map(Graph::num_edges);
        Ok(Self {
            num_graphs: set.len(),
            mean_nodes: nodes.clone().sum::<usize>() as f64 / n,
            min_nodes: nodes.clone().min().unwrap_or(0),
            max_nodes: nodes.max().unwrap_or(0),
            mean_edges: edges.clone().sum::<usize>() as f64 / n,
            min_edges: edges.clone().min().unwrap_or(0),
            max_edges: edges.max().unwrap_or(0),
        })
    }
}

/// Keep graphs with `min_nodes <= num_nodes <= max_nodes`, preserving order.
pub fn filter_by_size(set: &GraphSet, min_nodes: usize, max_nodes: usize) -> Result<GraphSet> {
    if min_nodes == 0 {
        return Err(Error::arg("min_nodes must be at least 1"));
    }
    let graphs: Vec<Graph> = set
        .iter()
        .filter(|g| (min_nodes..=max_nodes).contains(&g.num_nodes()))
        .cloned()
        .collect();
    if graphs.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no graph has between {min_nodes} and {max_nodes} nodes"
        )));
    }
    Ok(GraphSet {
        graphs,
        provenance: set.provenance,
    })
}

/// Uniform sample of `n` graphs without replacement, in original order.
pub fn sample_subset(set: &GraphSet, n: usize, rng_seed: u64) -> Result<GraphSet> {
    if n == 0 || n > set.len() {
        return Err(Error::arg(format!(
            "cannot sample {n} graphs from a set of {}",
            set.len()
        )));
    }
    let mut rng = seed::rng(rng_seed);
    let mut picked = index::sample(&mut rng, set.len(), n).into_vec();
    picked.sort_unstable();
    Ok(GraphSet {
        graphs: picked.into_iter().map(|i| set.graphs[i].clone()).collect(),
        provenance: set.provenance,
    })
}

/// G(n, p): every unordered pair independently with probability `edge_prob`.
pub fn erdos_renyi(num_nodes: usize, edge_prob: f64, rng_seed: u64) -> Result<Graph> {
    let mut rng = seed::rng(rng_seed);
    erdos_renyi_with(num_nodes, edge_prob, &mut rng)
}

pub(crate) fn erdos_renyi_with<R: Rng>(num_nodes: usize, edge_prob: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::arg(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    if num_nodes == 0 {
        return Err(Error::arg("Erdős–Rényi graph needs at least one node"));
    }
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in u + 1..num_nodes {
            if rng.gen::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    Graph::new(0, num_nodes, edges)
}

/// Local clustering coefficient per node; degree < 2 gives 0.
pub fn clustering_coefficients(g: &Graph) -> Vec<f64> {
    let adj = g.adjacency();
    adj.iter()
        .map(|nbrs| {
            let d = nbrs.len();
            if d < 2 {
                return 0.0;
            }
            let mut closed = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if adj[a].binary_search(&b).is_ok() {
                        closed += 1;
                    }
                }
            }
            closed as f64 / (d * (d - 1) / 2) as f64
        })
        .collect()
}

/// Normalized degree histogram (bins `0..degree_bins-1`, last bin is overflow)
/// followed by a normalized clustering-coefficient histogram over `cc_bins`
/// equal bins on `[0, 1]`.
pub fn graph_descriptor(g: &Graph, degree_bins: usize, cc_bins: usize) -> Result<Vec<f64>> {
    if degree_bins < 2 || cc_bins < 1 {
        return Err(Error::arg(format!(
            "descriptor needs degree_bins >= 2 and cc_bins >= 1, got {degree_bins} and {cc_bins}"
        )));
    }
    let n = g.num_nodes() as f64;
    let mut out = vec![0.0; degree_bins + cc_bins];
    for d in g.degrees() {
        out[d.min(degree_bins - 1)] += 1.0;
    }
    for c in clustering_coefficients(g) {
        let bin = ((c * cc_bins as f64) as usize).min(cc_bins - 1);
        out[degree_bins + bin] += 1.0;
    }
    out.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}
