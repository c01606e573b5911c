use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu if z > 0.0 => 1.0,
            Activation::Relu => 0.0,
            Activation::Identity => 1.0,
        }
    }
}

/// Sum-aggregation message passing:
/// `H' = act((A·H)·W_neigh + H·W_self + b)` with `A` the unnormalized,
/// symmetric adjacency of an undirected edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePassingLayer {
    pub w_neigh: DenseMatrix,
    pub w_self: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Intermediate values of a forward pass needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: DenseMatrix,
    pub aggregated: DenseMatrix,
    pub pre_activation: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub w_neigh: DenseMatrix,
    pub w_self: DenseMatrix,
    pub bias: Vec<f64>,
}

impl MessagePassingLayer {
    pub fn new(
        w_neigh: DenseMatrix,
        w_self: DenseMatrix,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if w_neigh.shape() != w_self.shape() || bias.len() != w_self.cols() {
            return Err(Error::shape(format!(
                "layer parts disagree: w_neigh {:?}, w_self {:?}, bias {}",
                w_neigh.shape(),
                w_self.shape(),
                bias.len()
            )));
        }
        Ok(Self {
            w_neigh,
            w_self,
            bias,
            activation,
        })
    }

    /// Weights uniform in `[-1/√d_in, 1/√d_in]`, zero bias.
    pub fn init_uniform<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        let mut draw = || uniform_matrix(d_in, d_out, rng);
        let w_neigh = draw();
        let w_self = draw();
        Self {
            w_neigh,
            w_self,
            bias: vec![0.0; d_out],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_self.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w_self.cols()
    }

    pub fn forward(&self, edges: &[(usize, usize)], h: &DenseMatrix) -> Result<DenseMatrix> {
        self.forward_cached(edges, h).map(|(out, _)| out)
    }

    pub fn forward_cached(
        &self,
        edges: &[(usize, usize)],
        h: &DenseMatrix,
    ) -> Result<(DenseMatrix, LayerCache)> {
        if h.cols() != self.in_dim() {
            return Err(Error::shape(format!(
                "layer expects {} input features, got {}",
                self.in_dim(),
                h.cols()
            )));
        }
        let aggregated = aggregate(edges, h)?;
        let mut z = aggregated.matmul(&self.w_neigh)?;
        z.add_assign(&h.matmul(&self.w_self)?)?;
        z.add_row_vector(&self.bias)?;
        let mut out = z.clone();
        out.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = self.activation.apply(*v));
        Ok((
            out,
            LayerCache {
                input: h.clone(),
                aggregated,
                pre_activation: z,
            },
        ))
    }

    /// Gradients of `Σ upstream ⊙ forward(h)` with respect to the layer
    /// parameters and to `h`.
    pub fn backward(
        &self,
        edges: &[(usize, usize)],
        cache: &LayerCache,
        upstream: &DenseMatrix,
    ) -> Result<(LayerGrads, DenseMatrix)> {
        if upstream.shape() != cache.pre_activation.shape() {
            return Err(Error::shape(format!(
                "upstream gradient {:?} does not match layer output {:?}",
                upstream.shape(),
                cache.pre_activation.shape()
            )));
        }
        let mut dz = upstream.clone();
        for (g, &z) in dz.as_mut_slice().iter_mut().zip(cache.pre_activation.as_slice()) {
            *g *= self.activation.derivative(z);
        }
        let grads = LayerGrads {
            w_neigh: cache.aggregated.t_matmul(&dz)?,
            w_self: cache.input.t_matmul(&dz)?,
            bias: dz.column_sums(),
        };
        // A is symmetric, so Aᵀ·(dZ·W_neighᵀ) aggregates over the same neighbors.
        let mut dh = aggregate(edges, &dz.matmul_t(&self.w_neigh)?)?;
        dh.add_assign(&dz.matmul_t(&self.w_self)?)?;
        Ok((grads, dh))
    }

    /// Recompute the forward pass and differentiate it.
    pub fn backward_from_input(
        &self,
        edges: &[(usize, usize)],
        h: &DenseMatrix,
        upstream: &DenseMatrix,
    ) -> Result<(LayerGrads, DenseMatrix)> {
        let (_, cache) = self.forward_cached(edges, h)?;
        self.backward(edges, &cache, upstream)
    }
}

fn uniform_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = 1.0 / (rows.max(1) as f64).sqrt();
    let mut m = DenseMatrix::zeros(rows, cols);
    m.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = rng.gen_range(-bound..=bound));
    m
}

/// Row `i` of the result is the sum of rows `j` of `h` over neighbors `j` of `i`.
pub(crate) fn aggregate(edges: &[(usize, usize)], h: &DenseMatrix) -> Result<DenseMatrix> {
    let n = h.rows();
    let mut out = DenseMatrix::zeros(n, h.cols());
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::shape(format!("edge ({u}, {v}) outside {n} nodes")));
        }
        for c in 0..h.cols() {
            out[(u, c)] += h[(v, c)];
            out[(v, c)] += h[(u, c)];
        }
    }
    Ok(out)
}

/// Column means (graph readout).
pub fn mean_pool(h: &DenseMatrix) -> Result<Vec<f64>> {
    if h.rows() == 0 {
        return Err(Error::arg("mean pool over zero rows"));
    }
    let n = h.rows() as f64;
    Ok(h.column_sums().into_iter().map(|s| s / n).collect())
}
