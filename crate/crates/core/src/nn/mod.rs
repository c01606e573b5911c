//! Minimal numerical kernel for message-passing networks.
//!
//! Each layer and loss ships a hand-derived backward pass; there is no
//! general autodiff. Finite-difference tests keep the derivations honest.

mod layer;
mod loss;
mod optim;

pub use layer::{mean_pool, Activation, LayerCache, LayerGrads, MessagePassingLayer};
pub use loss::{bce_logit_loss, sce_loss};
pub use optim::{AdamConfig, Param, ParamStore};
