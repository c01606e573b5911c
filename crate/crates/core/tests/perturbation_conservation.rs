//! Conservation laws of the perturbations over many seeds.

use ggmeval::graph::{erdos_renyi, Graph, GraphSet};
use ggmeval::perturb::{
    cluster_graphs, mix_random, mix_random_with, mode_collapse, mode_drop, rewire_edges,
    MixingSource, Severity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 50;

fn corpus(seed: u64) -> GraphSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_graphs = rng.gen_range(10..40);
    GraphSet::real(
        (0..n_graphs)
            .map(|i| {
                let mut g = erdos_renyi(rng.gen_range(8..20), rng.gen_range(0.05..0.3), rng.gen()).unwrap();
                g.id = i;
                g
            })
            .collect(),
    )
}

fn assert_valid(g: &Graph) {
    let rebuilt = Graph::new(g.id, g.num_nodes(), g.edges().to_vec()).unwrap();
    assert_eq!(rebuilt.edges(), g.edges(), "edge list not canonical");
    assert!(g.edges().iter().all(|&(u, v)| u < v && v < g.num_nodes()));
}

fn is_complete(g: &Graph) -> bool {
    let n = g.num_nodes();
    g.num_edges() == n * (n - 1) / 2
}

#[test]
fn rewiring_preserves_node_and_edge_counts() {
    for seed in 0..SEEDS {
        let real = corpus(seed);
        let t = Severity::new((seed % 11) as f64 / 10.0).unwrap();
        let out = rewire_edges(&real, t, seed ^ 0xABCD).unwrap();
        assert_eq!(out.len(), real.len());
        for (a, b) in real.iter().zip(out.iter()) {
            assert_eq!(a.num_nodes(), b.num_nodes());
            assert_eq!(a.num_edges(), b.num_edges());
            assert_valid(b);
        }
    }
}

#[test]
fn mixing_replaces_round_t_n_positions() {
    for seed in 0..SEEDS {
        let real = corpus(seed);
        let n = real.len();
        let t = (seed % 21) as f64 / 20.0;
        let expected = (t * n as f64).round() as usize;
        // Complete replacements are distinguishable from the sparse originals.
        let out = mix_random_with(&real, Severity::new(t).unwrap(), seed, MixingSource::Fixed(1.0)).unwrap();
        assert_eq!(out.len(), n);
        assert_eq!(out.iter().filter(|g| is_complete(g)).count(), expected, "seed {seed}");
        for (a, b) in real.iter().zip(out.iter()) {
            assert_eq!(a.num_nodes(), b.num_nodes());
            assert_valid(b);
        }
        let matched = mix_random(&real, Severity::new(t).unwrap(), seed).unwrap();
        let changed = real.iter().zip(matched.iter()).filter(|(a, b)| a.edges() != b.edges()).count();
        assert!(changed <= expected);
        matched.iter().for_each(assert_valid);
    }
}

#[test]
fn mode_operations_preserve_set_size() {
    for seed in 0..SEEDS {
        let real = corpus(seed);
        let k = 1 + (seed as usize % 6);
        let clusters = cluster_graphs(&real, k, seed).unwrap();
        for c in 0..=k {
            let collapsed = mode_collapse(&real, &clusters, c, seed + c as u64).unwrap();
            assert_eq!(collapsed.len(), real.len());
            collapsed.iter().for_each(assert_valid);
            if c < k {
                let dropped = mode_drop(&real, &clusters, c, seed + c as u64).unwrap();
                assert_eq!(dropped.len(), real.len());
                dropped.iter().for_each(assert_valid);
            }
        }
    }
}
