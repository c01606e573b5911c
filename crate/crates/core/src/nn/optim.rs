use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A named parameter with its gradient and Adam moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
    first_moment: DenseMatrix,
    second_moment: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Ordered, uniquely named parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

/// On-disk form: names, shapes and row-major values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredParam {
    name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: DenseMatrix) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::arg(format!("duplicate parameter name {name:?}")));
        }
        let (r, c) = value.shape();
        self.params.push(Param {
            name,
            value,
            grad: DenseMatrix::zeros(r, c),
            first_moment: DenseMatrix::zeros(r, c),
            second_moment: DenseMatrix::zeros(r, c),
        });
        Ok(())
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    fn lookup(&self, name: &str) -> Result<&Param> {
        self.index_of(name)
            .map(|i| &self.params[i])
            .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))
    }

    pub fn get(&self, name: &str) -> Result<&DenseMatrix> {
        self.lookup(name).map(|p| &p.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut DenseMatrix> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))?;
        Ok(&mut self.params[i].value)
    }

    /// Add `grad` into the gradient buffer of `name`.
    pub fn accumulate(&mut self, name: &str, grad: &DenseMatrix) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))?;
        self.params[i].grad.add_assign(grad)
    }

    pub fn grad(&self, name: &str) -> Result<&DenseMatrix> {
        self.lookup(name).map(|p| &p.grad)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// One bias-corrected Adam update (`step_index` starts at 1), then zero
    /// the gradients.
    pub fn adam_step(&mut self, cfg: &AdamConfig, step_index: u64) -> Result<()> {
        if step_index == 0 {
            return Err(Error::arg("Adam step index starts at 1"));
        }
        let t = step_index.min(i32::MAX as u64) as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in &mut self.params {
            let values = p.value.as_mut_slice();
            let grads = p.grad.as_mut_slice();
            let m = p.first_moment.as_mut_slice();
            let v = p.second_moment.as_mut_slice();
            for i in 0..values.len() {
                let g = grads[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
                grads[i] = 0.0;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let stored: Vec<StoredParam> = self
            .params
            .iter()
            .map(|p| StoredParam {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                values: p.value.as_slice().to_vec(),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&stored)?)
    }

    /// Restores values; gradients and moments start at zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let stored: Vec<StoredParam> = serde_json::from_str(text)?;
        let mut store = Self::new();
        for s in stored {
            store.insert(s.name, DenseMatrix::from_vec(s.rows, s.cols, s.values)?)?;
        }
        Ok(store)
    }
}
