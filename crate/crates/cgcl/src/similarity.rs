//! Node similarity functions.
//!
//! Two positive similarities over representation vectors, both controlled
//! by a sensitivity factor tau > 0:
//!
//! - exponent cosine: `exp(cos(x1, x2) / tau)`;
//! - Gaussian RBF: `exp(-||x1 - x2||^2 / tau^2)`.
//!
//! Besides the scalar forms, this module builds differentiable pairwise
//! similarity matrices between the rows of two tensors on a tape.

use crate::matrix::Matrix;
use crate::tensor::{TensorError, Var};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityKind {
    #[serde(rename = "exponent-cosine")]
    ExponentCosine,
    #[serde(rename = "gaussian-rbf")]
    GaussianRbf,
}

impl std::str::FromStr for SimilarityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exponent-cosine" => Ok(SimilarityKind::ExponentCosine),
            "gaussian-rbf" => Ok(SimilarityKind::GaussianRbf),
            other => Err(format!(
                "unknown similarity {other:?}; expected \"exponent-cosine\" or \"gaussian-rbf\""
            )),
        }
    }
}

/// A similarity function with its sensitivity factor.
#[derive(Clone, Copy, Debug)]
pub struct Similarity {
    pub kind: SimilarityKind,
    pub tau: f64,
}

impl Similarity {
    /// Panics if tau is not positive; config validation happens upstream.
    pub fn new(kind: SimilarityKind, tau: f64) -> Self {
        assert!(
            tau > 0.0,
            "sensitivity factor tau must be positive, got {tau}"
        );
        Similarity { kind, tau }
    }

    /// Scalar similarity between two vectors.
    pub fn scalar(&self, x1: &[f64], x2: &[f64]) -> Result<f64, TensorError> {
        assert_eq!(
            x1.len(),
            x2.len(),
            "similarity dim mismatch: {} vs {}",
            x1.len(),
            x2.len()
        );
        match self.kind {
            SimilarityKind::ExponentCosine => {
                let n1 = norm(x1);
                let n2 = norm(x2);
                if n1 == 0.0 {
                    return Err(TensorError::ZeroVector {
                        context: "similarity",
                        row: 0,
                    });
                }
                if n2 == 0.0 {
                    return Err(TensorError::ZeroVector {
                        context: "similarity",
                        row: 1,
                    });
                }
                let dot: f64 = x1.iter().zip(x2).map(|(a, b)| a * b).sum();
                Ok(((dot / self.tau) / (n1 * n2)).exp())
            }
            SimilarityKind::GaussianRbf => {
                let sq: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-sq / (self.tau * self.tau)).exp())
            }
        }
    }

    /// Differentiable NxK matrix of similarities between the rows of `a`
    /// (NxD) and the rows of `b` (KxD).
    ///
    /// Under exponent cosine a zero row in either input is an error.
    pub fn matrix<'t>(&self, a: Var<'t>, b: Var<'t>) -> Result<Var<'t>, TensorError> {
        match self.kind {
            SimilarityKind::ExponentCosine => {
                check_nonzero_rows(a, "similarity lhs")?;
                check_nonzero_rows(b, "similarity rhs")?;
                let an = a.row_l2_normalize();
                let bn = b.row_l2_normalize();
                Ok(an.matmul(bn.t()).scale(1.0 / self.tau).exp())
            }
            SimilarityKind::GaussianRbf => Ok(sq_dist_matrix(a, b)
                .scale(-1.0 / (self.tau * self.tau))
                .exp()),
        }
    }

    /// Plain (non-tape) pairwise similarity matrix.
    pub fn matrix_plain(&self, a: &Matrix, b: &Matrix) -> Result<Matrix, TensorError> {
        let mut out = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            for k in 0..b.rows() {
                out[(i, k)] = self.scalar(a.row(i), b.row(k))?;
            }
        }
        Ok(out)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_nonzero_rows(v: Var<'_>, context: &'static str) -> Result<(), TensorError> {
    v.with_value(|m| {
        for i in 0..m.rows() {
            if m.row(i).iter().all(|&x| x == 0.0) {
                return Err(TensorError::ZeroVector { context, row: i });
            }
        }
        Ok(())
    })
}

/// Differentiable NxK matrix of squared distances between the rows of `a`
/// (NxD) and `b` (KxD): `||a_i||^2 + ||b_k||^2 - 2 a_i . b_k`.
pub fn sq_dist_matrix<'t>(a: Var<'t>, b: Var<'t>) -> Var<'t> {
    a.matmul(b.t())
        .scale(-2.0)
        .add_row_broadcast(b.row_sq_norms().t())
        .add_col_broadcast(a.row_sq_norms())
}
