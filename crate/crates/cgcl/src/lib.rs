//! Community-aware graph contrastive learning.
//!
//! Self-supervised representation learning on attributed graphs that trains
//! a community partition jointly with the node encoder:
//!
//! - [`tensor`]: dense-matrix reverse-mode autodiff and an Adam optimizer;
//! - [`graph`], [`dataset`], [`sbm`]: graph model, on-disk format, and a
//!   stochastic-block-model generator for desk-scale ground truth;
//! - [`augment`]: seeded attribute-masking / edge-dropping view generation;
//! - [`encoder`]: two-layer graph-convolution encoder plus MLP projector;
//! - [`community`]: soft community assignment and the density objectives
//!   that train the centroids end to end;
//! - [`contrast`]: node-level and community-level contrastive losses and
//!   the decaying joint objective;
//! - [`train`]: the single-view and multiplex training loops;
//! - [`eval`]: linear probe, K-means, NMI/ARI, density/entropy diagnostics
//!   and multi-view confidence fusion;
//! - [`cli`]: the `synth` / `train` / `eval` / `ablate` commands.
//!
//! Error discipline: conditions arising from user input (files, configs)
//! are `Result`s with per-module error enums; shape mismatches inside the
//! numeric pipeline are bugs and panic with both shapes in the message.

pub mod augment;
pub mod cli;
pub mod community;
pub mod contrast;
pub mod dataset;
pub mod encoder;
pub mod eval;
pub mod graph;
pub mod matrix;
pub mod rng;
pub mod sbm;
pub mod similarity;
pub mod tensor;
pub mod train;

pub use matrix::Matrix;
