//! Stochastic graph-view generation: attribute masking and edge dropping.
//!
//! Each augmentation draws one Bernoulli mask over the feature dimensions
//! and applies it to every node, and drops each undirected edge
//! independently. Callers own the RNG; two views per epoch come from
//! distinct seeded streams (see [`crate::rng`]).

use crate::graph::AttributedGraph;
use crate::matrix::Matrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("probability {name} must be in [0,1], got {value}")]
    Probability { name: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Probability of masking a feature dimension.
    pub p_v: f64,
    /// Probability of dropping an edge.
    pub p_e: f64,
}

impl AugmentConfig {
    pub fn new(p_v: f64, p_e: f64) -> Result<Self, AugmentError> {
        check_probability("p_v", p_v)?;
        check_probability("p_e", p_e)?;
        Ok(AugmentConfig { p_v, p_e })
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), AugmentError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AugmentError::Probability { name, value })
    }
}

/// Zero out feature dimensions with probability `p_v`, with one mask vector
/// shared by every row.
pub fn mask_attributes(x: &Matrix, p_v: f64, rng: &mut impl Rng) -> Result<Matrix, AugmentError> {
    check_probability("p_v", p_v)?;
    let mask: Vec<f64> = (0..x.cols())
        .map(|_| {
            if rng.gen::<f64>() < 1.0 - p_v {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        x[(i, j)] * mask[j]
    }))
}

/// Keep each undirected edge independently with probability `1 - p_e`.
pub fn drop_edges(
    edges: &[(usize, usize)],
    p_e: f64,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>, AugmentError> {
    check_probability("p_e", p_e)?;
    Ok(edges
        .iter()
        .copied()
        .filter(|_| rng.gen::<f64>() < 1.0 - p_e)
        .collect())
}

/// One augmented view: masked attributes and a thinned edge set.
pub fn augment_view(
    g: &AttributedGraph,
    cfg: AugmentConfig,
    rng: &mut impl Rng,
) -> Result<(Matrix, Vec<(usize, usize)>), AugmentError> {
    let x = mask_attributes(g.attributes(), cfg.p_v, rng)?;
    let edges = drop_edges(g.edges(), cfg.p_e, rng)?;
    Ok((x, edges))
}
