//! Controlled degradations of a real graph set.
//!
//! Mixing and rewiring lower fidelity; mode collapse and mode dropping lower
//! diversity. Every operation is a pure function of `(set, severity, seed)`
//! and preserves the number of graphs.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{erdos_renyi_with, graph_descriptor, Graph, GraphSet, Provenance};
use crate::graph::{DEFAULT_CC_BINS, DEFAULT_DEGREE_BINS};
use crate::matrix::sq_dist;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    #[serde(rename = "mixing")]
    MixingRandom,
    #[serde(rename = "rewiring")]
    RewiringEdges,
    ModeCollapse,
    #[serde(rename = "mode-dropping")]
    ModeDropping,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 4] = [
        PerturbationKind::MixingRandom,
        PerturbationKind::RewiringEdges,
        PerturbationKind::ModeCollapse,
        PerturbationKind::ModeDropping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::MixingRandom => "mixing",
            PerturbationKind::RewiringEdges => "rewiring",
            PerturbationKind::ModeCollapse => "mode-collapse",
            PerturbationKind::ModeDropping => "mode-dropping",
        }
    }

    /// Mode kinds sweep over cluster counts instead of a severity grid.
    pub fn is_mode(self) -> bool {
        matches!(self, PerturbationKind::ModeCollapse | PerturbationKind::ModeDropping)
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl std::fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown perturbation {s:?}")))
    }
}

/// Perturbation degree `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Severity(f64);

impl Severity {
    pub const ZERO: Severity = Severity(0.0);
    pub const ONE: Severity = Severity(1.0);

    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(Severity(t))
        } else {
            Err(Error::arg(format!("severity {t} outside [0, 1]")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Severity {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        Severity::new(t)
    }
}

impl From<Severity> for f64 {
    fn from(s: Severity) -> f64 {
        s.0
    }
}

/// `[0, step, 2·step, …, 1]`; the last level is exactly 1.
pub fn sweep_levels(step: f64) -> Result<Vec<Severity>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::arg(format!("sweep step {step} outside (0, 1]")));
    }
    let mut levels = Vec::new();
    let mut i = 0u64;
    loop {
        let t = i as f64 * step;
        // Absorb round-off so 100 * 0.01 does not yield an extra level.
        if t >= 1.0 - 1e-9 {
            break;
        }
        levels.push(Severity(t));
        i += 1;
    }
    levels.push(Severity::ONE);
    Ok(levels)
}

fn require_real(set: &GraphSet, op: &str) -> Result<()> {
    match set.provenance {
        Provenance::Real => Ok(()),
        Provenance::Perturbed { .. } => Err(Error::Precondition(format!(
            "{op} expects a real graph set, got an already perturbed one"
        ))),
    }
}

fn perturbed(graphs: Vec<Graph>, kind: PerturbationKind, t: f64) -> GraphSet {
    GraphSet {
        graphs,
        provenance: Provenance::Perturbed { kind, severity: t },
    }
}

/// Edge probability of replacement graphs used by [`mix_random_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingSource {
    /// Same node count and the replaced graph's edge density.
    MatchDensity,
    /// Same node count, fixed edge probability.
    Fixed(f64),
}

/// Replace `round(t·N)` uniformly chosen graphs by density-matched
/// Erdős–Rényi graphs.
pub fn mix_random(set: &GraphSet, t: Severity, rng_seed: u64) -> Result<GraphSet> {
    mix_random_with(set, t, rng_seed, MixingSource::MatchDensity)
}

pub fn mix_random_with(
    set: &GraphSet,
    t: Severity,
    rng_seed: u64,
    source: MixingSource,
) -> Result<GraphSet> {
    require_real(set, "mixing")?;
    if let MixingSource::Fixed(p) = source {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::arg(format!("mixing edge probability {p} outside [0, 1]")));
        }
    }
    let n = set.len();
    let count = (t.value() * n as f64).round() as usize;
    let mut rng = seed::rng(rng_seed);
    let mut positions = index::sample(&mut rng, n, count.min(n)).into_vec();
    positions.sort_unstable();

    let mut graphs = set.graphs.clone();
    for pos in positions {
        let orig = &set.graphs[pos];
        let nodes = orig.num_nodes();
        let p = match source {
            MixingSource::Fixed(p) => p,
            MixingSource::MatchDensity if nodes < 2 => 0.0,
            MixingSource::MatchDensity => {
                let pairs = (nodes * (nodes - 1) / 2) as f64;
                orig.num_edges() as f64 / pairs
            }
        };
        let mut replacement = erdos_renyi_with(nodes, p, &mut rng)?;
        replacement.id = orig.id;
        if let Some(labels) = orig.node_labels() {
            replacement = replacement.with_labels(labels.to_vec())?;
        }
        graphs[pos] = replacement;
    }
    Ok(perturbed(graphs, PerturbationKind::MixingRandom, t.value()))
}

/// Rewire each edge independently with probability `t`: one endpoint is
/// chosen by a fair coin and the edge is moved from it to a uniformly chosen
/// node that creates neither a self-loop nor a duplicate. If no such node
/// exists the edge stays.
pub fn rewire_edges(set: &GraphSet, t: Severity, rng_seed: u64) -> Result<GraphSet> {
    require_real(set, "rewiring")?;
    let mut rng = seed::rng(rng_seed);
    let mut graphs = Vec::with_capacity(set.len());
    for g in set.iter() {
        graphs.push(rewire_graph(g, t.value(), &mut rng)?);
    }
    Ok(perturbed(graphs, PerturbationKind::RewiringEdges, t.value()))
}

fn rewire_graph<R: Rng>(g: &Graph, t: f64, rng: &mut R) -> Result<Graph> {
    let n = g.num_nodes();
    let mut edges = g.edges().to_vec();
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut candidates = Vec::with_capacity(n);
    for e in edges.iter_mut() {
        if rng.gen::<f64>() >= t {
            continue;
        }
        let (a, b) = *e;
        let keep = if rng.gen::<bool>() { b } else { a };
        candidates.clear();
        candidates.extend(
            (0..n).filter(|&w| w != keep && !present.contains(&(keep.min(w), keep.max(w)))),
        );
        if candidates.is_empty() {
            continue;
        }
        let w = candidates[rng.gen_range(0..candidates.len())];
        present.remove(e);
        *e = (keep.min(w), keep.max(w));
        present.insert(*e);
    }
    let mut out = Graph::new(g.id, n, edges)?;
    if let Some(labels) = g.node_labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    Ok(out)
}

/// k-medoids partition of a graph set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub num_clusters: usize,
    /// Cluster index per graph, aligned with the clustered set.
    pub labels: Vec<usize>,
    /// Graph index of each cluster's medoid.
    pub medoids: Vec<usize>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == cluster)
            .map(|(i, _)| i)
    }
}

const KMEDOIDS_MAX_ITER: usize = 100;

/// k-medoids over Euclidean distances between default graph descriptors.
pub fn cluster_graphs(set: &GraphSet, k: usize, rng_seed: u64) -> Result<ClusterAssignment> {
    let descriptors = set
        .iter()
        .map(|g| graph_descriptor(g, DEFAULT_DEGREE_BINS, DEFAULT_CC_BINS))
        .collect::<Result<Vec<_>>>()?;
    kmedoids(&descriptors, k, rng_seed)
}

/// Alternating k-medoids (assign to nearest medoid, then move each medoid to
/// the member with the smallest summed distance) from `k` uniformly sampled
/// distinct starting medoids. Ties go to the smallest index.
pub fn kmedoids<P: AsRef<[f64]>>(points: &[P], k: usize, rng_seed: u64) -> Result<ClusterAssignment> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::arg(format!("cannot form {k} clusters from {n} graphs")));
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| sq_dist(a.as_ref(), b.as_ref()).sqrt())
                .collect()
        })
        .collect();

    let mut rng = seed::rng(rng_seed);
    let mut medoids = index::sample(&mut rng, n, k).into_vec();
    let mut labels = assign(&dist, &medoids);
    for _ in 0..KMEDOIDS_MAX_ITER {
        let updated = update_medoids(&dist, &labels, k);
        if updated == medoids {
            break;
        }
        medoids = updated;
        labels = assign(&dist, &medoids);
    }
    // Medoids always minimize the summed distance of the final labels.
    medoids = update_medoids(&dist, &labels, k);
    Ok(ClusterAssignment {
        num_clusters: k,
        labels,
        medoids,
    })
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> Vec<usize> {
    let mut labels: Vec<usize> = dist
        .iter()
        .map(|row| {
            let mut best = 0;
            for (c, &m) in medoids.iter().enumerate().skip(1) {
                if row[m] < row[medoids[best]] {
                    best = c;
                }
            }
            best
        })
        .collect();
    // Duplicate descriptors could otherwise leave a cluster empty.
    for (c, &m) in medoids.iter().enumerate() {
        labels[m] = c;
    }
    labels
}

fn update_medoids(dist: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<usize> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
        .iter()
        .map(|ms| {
            let mut best = ms[0];
            let mut best_cost = f64::INFINITY;
            for &cand in ms {
                let cost: f64 = ms.iter().map(|&j| dist[cand][j]).sum();
                if cost < best_cost {
                    best = cand;
                    best_cost = cost;
                }
            }
            best
        })
        .collect()
}

fn check_clusters(set: &GraphSet, clusters: &ClusterAssignment) -> Result<()> {
    if clusters.labels.len() != set.len() {
        return Err(Error::arg(format!(
            "cluster assignment covers {} graphs, set has {}",
            clusters.labels.len(),
            set.len()
        )));
    }
    Ok(())
}

/// Replace every member of `n_collapsed` randomly chosen clusters by a copy of
/// its cluster's medoid graph.
pub fn mode_collapse(
    set: &GraphSet,
    clusters: &ClusterAssignment,
    n_collapsed: usize,
    rng_seed: u64,
) -> Result<GraphSet> {
    check_clusters(set, clusters)?;
    let k = clusters.num_clusters;
    if n_collapsed > k {
        return Err(Error::arg(format!("cannot collapse {n_collapsed} of {k} clusters")));
    }
    let mut rng = seed::rng(rng_seed);
    let chosen = index::sample(&mut rng, k, n_collapsed).into_vec();
    let mut graphs = set.graphs.clone();
    for c in chosen {
        let medoid = &set.graphs[clusters.medoids[c]];
        for i in clusters.members(c) {
            graphs[i] = medoid.clone();
        }
    }
    Ok(perturbed(
        graphs,
        PerturbationKind::ModeCollapse,
        n_collapsed as f64 / k as f64,
    ))
}

/// Replace every member of `n_dropped` randomly chosen clusters by graphs
/// drawn uniformly with replacement from the surviving clusters.
pub fn mode_drop(
    set: &GraphSet,
    clusters: &ClusterAssignment,
    n_dropped: usize,
    rng_seed: u64,
) -> Result<GraphSet> {
    check_clusters(set, clusters)?;
    let k = clusters.num_clusters;
    if n_dropped >= k {
        return Err(Error::arg(format!(
            "cannot drop {n_dropped} of {k} clusters: at least one must remain"
        )));
    }
    let mut rng = seed::rng(rng_seed);
    let mut dropped = vec![false; k];
    for c in index::sample(&mut rng, k, n_dropped) {
        dropped[c] = true;
    }
    let survivors: Vec<usize> = (0..set.len()).filter(|&i| !dropped[clusters.labels[i]]).collect();
    let mut graphs = set.graphs.clone();
    for (i, g) in graphs.iter_mut().enumerate() {
        if dropped[clusters.labels[i]] {
            *g = set.graphs[survivors[rng.gen_range(0..survivors.len())]].clone();
        }
    }
    Ok(perturbed(
        graphs,
        PerturbationKind::ModeDropping,
        n_dropped as f64 / k as f64,
    ))
}
