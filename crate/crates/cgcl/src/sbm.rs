//! Stochastic-block-model generator with planted communities.
//!
//! Desk-scale ground truth for the training and evaluation experiments:
//! labels are the planted block ids and node features blend a block one-hot
//! signal with uniform noise.

use crate::graph::{AttributedGraph, GraphError};
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmConfig {
    pub block_sizes: Vec<usize>,
    /// Intra-block edge probability.
    pub p_in: f64,
    /// Inter-block edge probability.
    pub p_out: f64,
    pub feature_dim: usize,
    /// Signal strength s in [0,1]: features are
    /// `s * one_hot(block) + (1-s) * uniform(0,1)` per dimension, with the
    /// one-hot padded to `feature_dim`.
    pub signal: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.block_sizes.is_empty() || self.block_sizes.iter().any(|&s| s == 0) {
            return Err(GraphError::Config("block sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_out)
            || !(0.0..=1.0).contains(&self.p_in)
            || self.p_out > self.p_in
        {
            return Err(GraphError::Config(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={}, p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(0.0..=1.0).contains(&self.signal) {
            return Err(GraphError::Config(format!(
                "signal strength must be in [0,1], got {}",
                self.signal
            )));
        }
        if self.signal > 0.0 && self.feature_dim < self.block_sizes.len() {
            return Err(GraphError::Config(format!(
                "feature_dim {} is smaller than the {} blocks a one-hot signal needs",
                self.feature_dim,
                self.block_sizes.len()
            )));
        }
        Ok(())
    }
}

/// Generate a graph with planted blocks. Deterministic per seed; edge and
/// feature randomness use separate streams so changing edge probabilities
/// never shifts the feature noise.
pub fn sbm_generate(cfg: &SbmConfig) -> Result<AttributedGraph, GraphError> {
    cfg.validate()?;
    let n: usize = cfg.block_sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in cfg.block_sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat(b).take(size));
    }

    let mut edge_rng = stream_rng(cfg.seed, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block_of[u] == block_of[v] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if edge_rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let mut feat_rng = stream_rng(cfg.seed, 1);
    let s = cfg.signal;
    let mut x = Matrix::zeros(n, cfg.feature_dim);
    for i in 0..n {
        for j in 0..cfg.feature_dim {
            let one_hot = if j == block_of[i] { 1.0 } else { 0.0 };
            x[(i, j)] = s * one_hot + (1.0 - s) * feat_rng.gen::<f64>();
        }
    }

    AttributedGraph::new(n, edges, x, Some(block_of))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64) -> SbmConfig {
        SbmConfig {
            block_sizes,
            p_in,
            p_out,
            feature_dim: 8,
            signal: 0.5,
            seed,
        }
    }

    #[test]
    fn disconnected_blocks_are_exact_components() {
        let g = sbm_generate(&cfg(vec![5, 5, 5], 1.0, 0.0, 3)).unwrap();
        let labels = g.labels().unwrap();
        for &(u, v) in g.edges() {
            assert_eq!(labels[u], labels[v]);
        }
        // p_in = 1: every intra-block pair is present.
        assert_eq!(g.edges().len(), 3 * (5 * 4 / 2));
    }

    #[test]
    fn intra_edge_count_within_binomial_bounds() {
        // Binomial oracle: trials = 2 * C(50,2), p = 0.3.
        let g = sbm_generate(&cfg(vec![50, 50], 0.3, 0.02, 17)).unwrap();
        let labels = g.labels().unwrap();
        let intra = g
            .edges()
            .iter()
            .filter(|&&(u, v)| labels[u] == labels[v])
            .count() as f64;
        let trials: f64 = 2.0 * (50.0 * 49.0 / 2.0);
        let mean = trials * 0.3;
        let sigma = (trials * 0.3 * 0.7).sqrt();
        assert!(
            (intra - mean).abs() <= 4.0 * sigma,
            "intra count {intra} outside 4 sigma of {mean}"
        );
    }

    #[test]
    fn same_seed_is_identical() {
        let c = cfg(vec![10, 10], 0.4, 0.1, 99);
        assert_eq!(sbm_generate(&c).unwrap(), sbm_generate(&c).unwrap());
    }

    #[test]
    fn pure_signal_makes_block_features_identical() {
        let g = sbm_generate(&SbmConfig {
            block_sizes: vec![4, 4],
            p_in: 1.0,
            p_out: 0.0,
            feature_dim: 6,
            signal: 1.0,
            seed: 5,
        })
        .unwrap();
        let x = g.attributes();
        for i in 1..4 {
            assert_eq!(x.row(i), x.row(0));
            assert_eq!(x.row(4 + i), x.row(4));
        }
        assert_ne!(x.row(0), x.row(4));
    }

    #[test]
    fn narrow_features_with_signal_are_rejected() {
        let bad = SbmConfig {
            block_sizes: vec![3, 3, 3],
            p_in: 0.5,
            p_out: 0.1,
            feature_dim: 2,
            signal: 0.5,
            seed: 0,
        };
        assert!(matches!(sbm_generate(&bad), Err(GraphError::Config(_))));
    }
}
