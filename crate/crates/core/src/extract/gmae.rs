//! Graph masked autoencoder trained on the real set.
//!
//! One model owns a stacked message-passing encoder and two reconstruction
//! heads. Per graph and epoch a fair coin picks which one is trained:
//!
//! - node masking: a fraction of node feature rows is replaced by a learned
//!   mask token, a one-layer message-passing decoder maps the encoding back
//!   to feature space, and the scaled cosine error is taken on masked rows
//! - edge masking: a fraction of edges is hidden from message passing, then
//!   hidden edges and as many sampled non-edges are scored by the inner
//!   product of endpoint encodings under a logistic loss
//!
//! Embeddings are read out from the unmasked encoder exactly like the random
//! GNN extractor.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSet};
use crate::matrix::{dot, DenseMatrix};
use crate::nn::{bce_logit_loss, sce_loss, Activation, AdamConfig, LayerCache, MessagePassingLayer, ParamStore};
use crate::seed;

use super::{embed_with_layers, features_of, EmbeddingSet};

/// Which reconstruction task each training step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskBranch {
    /// Fair coin per graph per epoch.
    #[default]
    Either,
    NodeOnly,
    EdgeOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmaeConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub mask_rate: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub sce_gamma: f64,
    pub seed: u64,
    pub branch: MaskBranch,
}

impl Default for GmaeConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            num_layers: 2,
            mask_rate: 0.2,
            epochs: 30,
            learning_rate: 1e-3,
            sce_gamma: 2.0,
            seed: 0,
            branch: MaskBranch::Either,
        }
    }
}

impl GmaeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(Error::Config(format!("mask rate {} outside (0, 1)", self.mask_rate)));
        }
        if self.num_layers == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("GMAE needs at least one layer of positive width".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.sce_gamma.is_nan() || self.sce_gamma < 1.0 {
            return Err(Error::Config(format!(
                "learning rate {} must be positive and sce gamma {} at least 1",
                self.learning_rate, self.sce_gamma
            )));
        }
        Ok(())
    }

    fn fingerprint(&self) -> String {
        format!(
            "gmae:h{}:l{}:mr{}:e{}:lr{}:g{}:s{}:{:?}",
            self.hidden_dim,
            self.num_layers,
            self.mask_rate,
            self.epochs,
            self.learning_rate,
            self.sce_gamma,
            self.seed,
            self.branch
        )
    }
}

const MASK_TOKEN: &str = "mask_token";
const DECODER: &str = "dec";

fn enc_name(l: usize) -> String {
    format!("enc{l}")
}

/// Trained (or freshly initialized) GMAE parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GmaeModel {
    pub params: ParamStore,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmaeTraining {
    pub model: GmaeModel,
    /// Mean per-graph loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn insert_layer(store: &mut ParamStore, prefix: &str, layer: MessagePassingLayer) -> Result<()> {
    store.insert(format!("{prefix}.w_neigh"), layer.w_neigh)?;
    store.insert(format!("{prefix}.w_self"), layer.w_self)?;
    store.insert(format!("{prefix}.bias"), DenseMatrix::from_rows(&[layer.bias])?)
}

fn load_layer(store: &ParamStore, prefix: &str, activation: Activation) -> Result<MessagePassingLayer> {
    MessagePassingLayer::new(
        store.get(&format!("{prefix}.w_neigh"))?.clone(),
        store.get(&format!("{prefix}.w_self"))?.clone(),
        store.get(&format!("{prefix}.bias"))?.row(0).to_vec(),
        activation,
    )
}

fn accumulate_layer(store: &mut ParamStore, prefix: &str, grads: &crate::nn::LayerGrads) -> Result<()> {
    store.accumulate(&format!("{prefix}.w_neigh"), &grads.w_neigh)?;
    store.accumulate(&format!("{prefix}.w_self"), &grads.w_self)?;
    store.accumulate(&format!("{prefix}.bias"), &DenseMatrix::from_rows(&[&grads.bias])?)
}

impl GmaeModel {
    /// Seeded initialization: uniform weights, zero biases, zero mask token.
    pub fn init(in_dim: usize, cfg: &GmaeConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if in_dim == 0 {
            return Err(Error::Config("GMAE input features are empty".into()));
        }
        let mut params = ParamStore::new();
        for l in 0..cfg.num_layers {
            let d_in = if l == 0 { in_dim } else { cfg.hidden_dim };
            let layer = MessagePassingLayer::init_uniform(d_in, cfg.hidden_dim, Activation::Relu, rng);
            insert_layer(&mut params, &enc_name(l), layer)?;
        }
        let dec = MessagePassingLayer::init_uniform(cfg.hidden_dim, in_dim, Activation::Identity, rng);
        insert_layer(&mut params, DECODER, dec)?;
        params.insert(MASK_TOKEN, DenseMatrix::zeros(1, in_dim))?;
        Ok(Self {
            params,
            in_dim,
            hidden_dim: cfg.hidden_dim,
            num_layers: cfg.num_layers,
            fingerprint: cfg.fingerprint(),
        })
    }

    /// Rebuild a model from stored parameters, inferring its dimensions.
    pub fn from_params(params: ParamStore) -> Result<Self> {
        let num_layers = (0..)
            .take_while(|&l| params.get(&format!("{}.w_self", enc_name(l))).is_ok())
            .count();
        if num_layers == 0 {
            return Err(Error::Config("parameter store holds no encoder layers".into()));
        }
        let first = params.get(&format!("{}.w_self", enc_name(0)))?;
        let (in_dim, hidden_dim) = first.shape();
        let model = Self {
            in_dim,
            hidden_dim,
            num_layers,
            fingerprint: format!("gmae:stored:in{in_dim}:h{hidden_dim}:l{num_layers}"),
            params,
        };
        model.encoder()?;
        model.decoder()?;
        if model.params.get(MASK_TOKEN)?.shape() != (1, in_dim) {
            return Err(Error::Config("mask token does not match the input width".into()));
        }
        Ok(model)
    }

    pub fn encoder(&self) -> Result<Vec<MessagePassingLayer>> {
        let layers = (0..self.num_layers)
            .map(|l| load_layer(&self.params, &enc_name(l), Activation::Relu))
            .collect::<Result<Vec<_>>>()?;
        for (l, layer) in layers.iter().enumerate() {
            let want_in = if l == 0 { self.in_dim } else { self.hidden_dim };
            if layer.in_dim() != want_in || layer.out_dim() != self.hidden_dim {
                return Err(Error::Config(format!("encoder layer {l} has unexpected shape")));
            }
        }
        Ok(layers)
    }

    fn decoder(&self) -> Result<MessagePassingLayer> {
        let dec = load_layer(&self.params, DECODER, Activation::Identity)?;
        if dec.in_dim() != self.hidden_dim || dec.out_dim() != self.in_dim {
            return Err(Error::Config("decoder shape does not match encoder".into()));
        }
        Ok(dec)
    }

    pub fn embedding_dim(&self) -> usize {
        self.hidden_dim * self.num_layers
    }
}

fn forward_encoder(
    layers: &[MessagePassingLayer],
    edges: &[(usize, usize)],
    x: &DenseMatrix,
) -> Result<(DenseMatrix, Vec<LayerCache>)> {
    let mut caches = Vec::with_capacity(layers.len());
    let mut h = x.clone();
    for layer in layers {
        let (out, cache) = layer.forward_cached(edges, &h)?;
        caches.push(cache);
        h = out;
    }
    Ok((h, caches))
}

/// Backpropagate `upstream` (gradient w.r.t. the last encoder output) and
/// return the gradient w.r.t. the encoder input.
fn backward_encoder(
    store: &mut ParamStore,
    layers: &[MessagePassingLayer],
    edges: &[(usize, usize)],
    caches: &[LayerCache],
    upstream: DenseMatrix,
) -> Result<DenseMatrix> {
    let mut grad = upstream;
    for (l, (layer, cache)) in layers.iter().zip(caches).enumerate().rev() {
        let (g, dh) = layer.backward(edges, cache, &grad)?;
        accumulate_layer(store, &enc_name(l), &g)?;
        grad = dh;
    }
    Ok(grad)
}

fn mask_count(rate: f64, total: usize) -> usize {
    ((rate * total as f64).round() as usize).clamp(1, total)
}

fn node_masking_step(
    model: &mut GmaeModel,
    g: &Graph,
    x: &DenseMatrix,
    cfg: &GmaeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = g.num_nodes();
    let mut masked = index::sample(rng, n, mask_count(cfg.mask_rate, n)).into_vec();
    masked.sort_unstable();

    let token = model.params.get(MASK_TOKEN)?.row(0).to_vec();
    let mut x_in = x.clone();
    for &i in &masked {
        x_in.row_mut(i).copy_from_slice(&token);
    }
    let layers = model.encoder()?;
    let decoder = model.decoder()?;
    let (z, caches) = forward_encoder(&layers, g.edges(), &x_in)?;
    let (recon, dec_cache) = decoder.forward_cached(g.edges(), &z)?;

    let (loss, d_pred) = sce_loss(&recon.select_rows(&masked), &x.select_rows(&masked), cfg.sce_gamma)?;
    let mut d_recon = DenseMatrix::zeros(recon.rows(), recon.cols());
    for (r, &i) in masked.iter().enumerate() {
        d_recon.row_mut(i).copy_from_slice(d_pred.row(r));
    }
    let (dec_grads, dz) = decoder.backward(g.edges(), &dec_cache, &d_recon)?;
    accumulate_layer(&mut model.params, DECODER, &dec_grads)?;
    let dx = backward_encoder(&mut model.params, &layers, g.edges(), &caches, dz)?;

    let mut d_token = DenseMatrix::zeros(1, x.cols());
    for &i in &masked {
        for (t, v) in d_token.row_mut(0).iter_mut().zip(dx.row(i)) {
            *t += v;
        }
    }
    model.params.accumulate(MASK_TOKEN, &d_token)?;
    Ok(loss)
}

fn edge_masking_step(
    model: &mut GmaeModel,
    g: &Graph,
    x: &DenseMatrix,
    cfg: &GmaeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = g.num_nodes();
    let m = g.num_edges();
    let n_mask = mask_count(cfg.mask_rate, m);
    let mut hidden_flag = vec![false; m];
    for e in index::sample(rng, m, n_mask) {
        hidden_flag[e] = true;
    }
    let (hidden, visible): (Vec<_>, Vec<_>) = g
        .edges()
        .iter()
        .zip(&hidden_flag)
        .partition(|(_, &h)| h);
    let hidden: Vec<(usize, usize)> = hidden.into_iter().map(|(e, _)| *e).collect();
    let visible: Vec<(usize, usize)> = visible.into_iter().map(|(e, _)| *e).collect();

    // Uniform non-edges by rejection; dense graphs may yield fewer.
    let present: HashSet<(usize, usize)> = g.edges().iter().copied().collect();
    let free_pairs = n * (n - 1) / 2 - m;
    let mut negatives = Vec::with_capacity(n_mask);
    let mut attempts = 0;
    while negatives.len() < n_mask.min(free_pairs) && attempts < 100 * n_mask {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !present.contains(&(u.min(v), u.max(v))) {
            negatives.push((u, v));
        }
    }

    let layers = model.encoder()?;
    let (z, caches) = forward_encoder(&layers, &visible, x)?;
    let pairs: Vec<(usize, usize)> = hidden.iter().chain(&negatives).copied().collect();
    let scores: Vec<f64> = pairs.iter().map(|&(u, v)| dot(z.row(u), z.row(v))).collect();
    let labels: Vec<f64> = (0..pairs.len())
        .map(|i| if i < hidden.len() { 1.0 } else { 0.0 })
        .collect();
    let (loss, d_scores) = bce_logit_loss(&scores, &labels)?;

    let mut dz = DenseMatrix::zeros(z.rows(), z.cols());
    for (&(u, v), &ds) in pairs.iter().zip(&d_scores) {
        for c in 0..z.cols() {
            dz[(u, c)] += ds * z[(v, c)];
            dz[(v, c)] += ds * z[(u, c)];
        }
    }
    backward_encoder(&mut model.params, &layers, &visible, &caches, dz)?;
    Ok(loss)
}

/// Train on the real set. Requires node features on every graph.
pub fn train_gmae(real_set: &GraphSet, cfg: &GmaeConfig) -> Result<GmaeTraining> {
    cfg.validate()?;
    if real_set.is_empty() {
        return Err(Error::EmptyDataset("GMAE training set is empty".into()));
    }
    let in_dim = features_of(&real_set.graphs[0])?.cols();
    for g in real_set.iter() {
        if features_of(g)?.cols() != in_dim {
            return Err(Error::Config(format!("graph {} has a different feature width", g.id)));
        }
    }

    let mut rng = seed::rng(cfg.seed);
    let mut model = GmaeModel::init(in_dim, cfg, &mut rng)?;
    let adam = AdamConfig {
        lr: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut order: Vec<usize> = (0..real_set.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut step = 0u64;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &gi in &order {
            let g = &real_set.graphs[gi];
            let x = features_of(g)?;
            let coin_says_nodes = rng.gen::<bool>();
            let use_nodes = match cfg.branch {
                MaskBranch::NodeOnly => true,
                MaskBranch::EdgeOnly => false,
                MaskBranch::Either => coin_says_nodes,
            } || g.num_edges() == 0;
            let loss = if use_nodes {
                node_masking_step(&mut model, g, x, cfg, &mut rng)?
            } else {
                edge_masking_step(&mut model, g, x, cfg, &mut rng)?
            };
            step += 1;
            model.params.adam_step(&adam, step)?;
            total += loss;
        }
        epoch_losses.push(total / real_set.len() as f64);
    }
    Ok(GmaeTraining { model, epoch_losses })
}

/// Embed with the frozen, unmasked encoder.
pub fn extract_gmae(model: &GmaeModel, set: &GraphSet) -> Result<EmbeddingSet> {
    embed_with_layers(&model.encoder()?, set, "gmae", model.fingerprint.clone())
}
