//! Attributed single-view and multiplex graph model.
//!
//! Edges are undirected, stored once in canonical `(min, max)` order. The
//! raw adjacency used by all density formulas is 0/1 with a zero diagonal
//! and materializes both `(i,j)` and `(j,i)`; self-loops exist only inside
//! the encoder's normalized operator.

use crate::matrix::Matrix;
use std::collections::BTreeSet;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {file} line {line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Config(String),
}

/// Undirected edge set over `n` nodes: no self-loops, no duplicates,
/// endpoints in range, canonical `(min, max)` order, sorted.
pub fn validate_edges(
    n: usize,
    edges: &[(usize, usize)],
) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut seen = BTreeSet::new();
    for &(u, v) in edges {
        if u == v {
            return Err(GraphError::Invalid(format!("self-loop at node {u}")));
        }
        if u >= n || v >= n {
            return Err(GraphError::Invalid(format!(
                "edge ({u}, {v}) out of range for {n} nodes"
            )));
        }
        let e = (u.min(v), u.max(v));
        if !seen.insert(e) {
            return Err(GraphError::Invalid(format!(
                "duplicate undirected edge ({}, {})",
                e.0, e.1
            )));
        }
    }
    Ok(seen.into_iter().collect())
}

/// Single-view attributed graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    x: Matrix,
    labels: Option<Vec<usize>>,
}

impl AttributedGraph {
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        x: Matrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, GraphError> {
        if x.rows() != n {
            return Err(GraphError::Invalid(format!(
                "attribute matrix has {} rows for {} nodes",
                x.rows(),
                n
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(GraphError::Invalid(format!(
                    "{} labels for {} nodes",
                    l.len(),
                    n
                )));
            }
        }
        let edges = validate_edges(n, &edges)?;
        Ok(AttributedGraph {
            n,
            edges,
            x,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn attributes(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of classes (max label + 1), when labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Raw 0/1 adjacency: zero diagonal, both orientations set.
    pub fn adjacency(&self) -> Matrix {
        adjacency(self.n, &self.edges)
    }

    /// Symmetrically normalized adjacency with self-loops.
    pub fn normalized_adjacency(&self) -> Matrix {
        normalized_adjacency(self.n, &self.edges)
    }
}

/// Multiplex graph: one or more edge sets (views) over shared nodes and
/// attributes. A single view is equivalent to an attributed graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexGraph {
    n: usize,
    views: Vec<Vec<(usize, usize)>>,
    x: Matrix,
    labels: Option<Vec<usize>>,
}

impl MultiplexGraph {
    pub fn new(
        n: usize,
        views: Vec<Vec<(usize, usize)>>,
        x: Matrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, GraphError> {
        if views.is_empty() {
            return Err(GraphError::Invalid(
                "multiplex graph needs at least one view".into(),
            ));
        }
        if x.rows() != n {
            return Err(GraphError::Invalid(format!(
                "attribute matrix has {} rows for {} nodes",
                x.rows(),
                n
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(GraphError::Invalid(format!(
                    "{} labels for {} nodes",
                    l.len(),
                    n
                )));
            }
        }
        let views = views
            .into_iter()
            .map(|edges| validate_edges(n, &edges))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultiplexGraph {
            n,
            views,
            x,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_edges(&self, r: usize) -> &[(usize, usize)] {
        &self.views[r]
    }

    pub fn attributes(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// View `r` as a standalone attributed graph (shared attributes cloned).
    pub fn view(&self, r: usize) -> AttributedGraph {
        AttributedGraph {
            n: self.n,
            edges: self.views[r].clone(),
            x: self.x.clone(),
            labels: self.labels.clone(),
        }
    }
}

impl From<AttributedGraph> for MultiplexGraph {
    fn from(g: AttributedGraph) -> Self {
        MultiplexGraph {
            n: g.n,
            views: vec![g.edges],
            x: g.x,
            labels: g.labels,
        }
    }
}

/// Raw 0/1 adjacency for an edge set: zero diagonal, symmetric.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    a
}

/// `D^{-1/2} (A + I) D^{-1/2}` where `D` is the degree matrix of `A + I`.
pub fn normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut a = adjacency(n, edges);
    for i in 0..n {
        a[(i, i)] = 1.0;
    }
    let inv_sqrt_deg: Vec<f64> = a.row_sums().iter().map(|d| 1.0 / d.sqrt()).collect();
    Matrix::from_fn(n, n, |i, j| a[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_duplicates_and_out_of_range() {
        assert!(matches!(
            validate_edges(4, &[(2, 2)]),
            Err(GraphError::Invalid(msg)) if msg.contains("self-loop")
        ));
        assert!(matches!(
            validate_edges(4, &[(0, 1), (1, 0)]),
            Err(GraphError::Invalid(msg)) if msg.contains("duplicate")
        ));
        assert!(matches!(
            validate_edges(4, &[(0, 7)]),
            Err(GraphError::Invalid(msg)) if msg.contains("out of range")
        ));
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        let norm = normalized_adjacency(1, &[]);
        assert_eq!(norm, Matrix::ones(1, 1));
    }

    #[test]
    fn two_nodes_one_edge_normalizes_to_half() {
        // A + I = ones(2), degrees 2 -> every entry 1/2.
        let norm = normalized_adjacency(2, &[(0, 1)]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((norm[(i, j)] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric_nonnegative_with_expected_support() {
        let n = 6;
        let edges = vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 5), (2, 5)];
        let norm = normalized_adjacency(n, &edges);
        let a = adjacency(n, &edges);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(norm[(i, j)], norm[(j, i)]);
                assert!(norm[(i, j)] >= 0.0);
                let expected_nonzero = i == j || a[(i, j)] != 0.0;
                assert_eq!(norm[(i, j)] != 0.0, expected_nonzero, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn single_view_multiplex_round_trips_to_attributed() {
        let g = AttributedGraph::new(
            3,
            vec![(0, 1), (1, 2)],
            Matrix::ones(3, 2),
            Some(vec![0, 1, 1]),
        )
        .unwrap();
        let mg: MultiplexGraph = g.clone().into();
        assert_eq!(mg.num_views(), 1);
        assert_eq!(mg.view(0), g);
    }
}
