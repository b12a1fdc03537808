//! Dense community aggregation: soft assignments, density objectives and
//! the modularity baseline.
//!
//! Nodes are softly assigned to trainable centroids; the training objective
//! rewards intra-community edge density and penalizes inter-community
//! density. The differentiable loss uses the vectorized form over the
//! community density matrix `F = R' A R`: the inter term is exact, and the
//! intra term is the lower bound obtained by replacing every per-community
//! density `d(k)` with `max_k d(k)`, i.e. `tr(R' (A - max_d * 1) R) / N`
//! with `1` the all-ones matrix. Per-community densities come from the hard
//! assignment of the current step and receive no gradient.
//!
//! The naive triple-loop forms of both densities live here as the reference
//! oracles the vectorized path is verified against; training never calls
//! them.

use crate::matrix::Matrix;
use crate::similarity::Similarity;
use crate::tensor::{TensorError, Var};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("modularity is undefined on a graph with no edges")]
    EmptyGraph,
}

/// Soft assignment matrix with its derived hard partition.
#[derive(Clone, Debug)]
pub struct CommunityState {
    soft: Matrix,
    hard: Vec<usize>,
    k: usize,
}

impl CommunityState {
    /// Derive the hard partition from a soft N x K assignment; argmax ties
    /// break toward the lowest community index.
    pub fn from_soft(soft: Matrix) -> Self {
        let hard = soft.row_argmax();
        let k = soft.cols();
        CommunityState { soft, hard, k }
    }

    pub fn soft(&self) -> &Matrix {
        &self.soft
    }

    pub fn hard(&self) -> &[usize] {
        &self.hard
    }

    pub fn num_communities(&self) -> usize {
        self.k
    }
}

/// Differentiable N x K soft assignment: row-normalized similarity between
/// node representations and community centroids.
pub fn assignment_matrix<'t>(
    sim: &Similarity,
    z: Var<'t>,
    centroids: Var<'t>,
) -> Result<Var<'t>, TensorError> {
    Ok(sim.matrix(z, centroids)?.row_normalize_sum())
}

/// Edge density of community `k` under a hard assignment: ordered in-community
/// adjacency entries over `|C_k| (|C_k| - 1)`. Communities with at most one
/// member have density 0 by convention.
pub fn edge_density(a: &Matrix, hard: &[usize], k: usize) -> f64 {
    let members: Vec<usize> = (0..hard.len()).filter(|&i| hard[i] == k).collect();
    let size = members.len();
    if size <= 1 {
        return 0.0;
    }
    let mut count = 0usize;
    for &i in &members {
        for &j in &members {
            if a[(i, j)] != 0.0 {
                count += 1;
            }
        }
    }
    count as f64 / (size * (size - 1)) as f64
}

/// Densities of all `k` communities. Empty communities attract no intra
/// credit; they are reported at density 0 with a warning.
pub fn edge_densities(a: &Matrix, hard: &[usize], k: usize) -> Vec<f64> {
    let mut sizes = vec![0usize; k];
    for &c in hard {
        sizes[c] += 1;
    }
    for (c, &size) in sizes.iter().enumerate() {
        if size == 0 {
            log::warn!("community {c} is empty under the current hard assignment");
        }
    }
    (0..k).map(|c| edge_density(a, hard, c)).collect()
}

/// Largest per-community density under the hard assignment.
pub fn max_density(a: &Matrix, hard: &[usize], k: usize) -> f64 {
    (0..k).map(|c| edge_density(a, hard, c)).fold(0.0, f64::max)
}

/// Intra-community density, triple-loop reference:
/// `(1/N) sum_{i,j} sum_k (A[i,j] - d(k)) R[i,k] R[j,k]`.
pub fn intra_density_naive(a: &Matrix, r: &Matrix, hard: &[usize]) -> f64 {
    let n = a.rows();
    let k = r.cols();
    let d: Vec<f64> = (0..k).map(|c| edge_density(a, hard, c)).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for (c, dc) in d.iter().enumerate() {
                total += (a[(i, j)] - dc) * r[(i, c)] * r[(j, c)];
            }
        }
    }
    total / n as f64
}

/// Inter-community density, triple-loop reference:
/// `(1/(N(N-1))) sum_{i,j} sum_{k1 != k2} A[i,j] R[i,k1] R[j,k2]`.
pub fn inter_density_naive(a: &Matrix, r: &Matrix) -> f64 {
    let n = a.rows();
    let k = r.cols();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] == 0.0 {
                continue;
            }
            for k1 in 0..k {
                for k2 in 0..k {
                    if k1 != k2 {
                        total += a[(i, j)] * r[(i, k1)] * r[(j, k2)];
                    }
                }
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Vectorized inter density over the community density matrix `F = R' A R`:
/// `(sum(F) - tr(F)) / (N(N-1))`. Equals the triple-loop form exactly.
pub fn inter_density_vectorized(a: &Matrix, r: &Matrix) -> f64 {
    let f = r.transpose().matmul(a).matmul(r);
    let n = a.rows();
    (f.sum() - f.trace()) / (n * (n - 1)) as f64
}

/// Vectorized lower bound of the intra density:
/// `tr(R' (A - max_d * ones) R) / N`.
pub fn intra_lower_bound_vectorized(a: &Matrix, r: &Matrix, hard: &[usize]) -> f64 {
    let n = a.rows();
    let dmax = max_density(a, hard, r.cols());
    let a_ext = extended_adjacency(a, dmax);
    r.transpose().matmul(&a_ext).matmul(r).trace() / n as f64
}

/// `A - dmax * ones`: replacing each community's expected density with the
/// maximum over communities, which is what makes the vectorized intra term
/// a lower bound of the exact one.
pub fn extended_adjacency(a: &Matrix, dmax: f64) -> Matrix {
    a.map(|v| v - dmax)
}

/// Differentiable single-view objective:
/// `lambda_w * D_inter - lower_bound(D_intra)` with both terms vectorized
/// over `F = R' A R`. The hard assignment (hence `max_d`) is a constant of
/// the current step.
pub fn deca_loss<'t>(r: Var<'t>, a: &Matrix, hard: &[usize], lambda_w: f64) -> Var<'t> {
    assert!(
        lambda_w >= 0.0,
        "lambda_w must be nonnegative, got {lambda_w}"
    );
    let n = a.rows();
    let (rn, k) = r.shape();
    assert_eq!(
        rn,
        n,
        "deca_loss shape mismatch: A {:?} vs R {:?}",
        a.shape(),
        r.shape()
    );
    assert_eq!(
        hard.len(),
        n,
        "hard assignment covers {} of {} nodes",
        hard.len(),
        n
    );

    let tape = r.tape();
    let dmax = max_density(a, hard, k);
    let a_const = tape.constant(a.clone());
    let a_ext = tape.constant(extended_adjacency(a, dmax));

    let rt = r.t();
    let f = rt.matmul(a_const).matmul(r);
    let f_ext = rt.matmul(a_ext).matmul(r);

    let inter = (f.sum_all() - f.trace()).scale(lambda_w / (n * (n - 1)) as f64);
    let intra = f_ext.trace().scale(1.0 / n as f64);
    inter - intra
}

/// Two-view objective: the mean of the single-view losses, each over its own
/// adjacency and hard assignment.
pub fn deca_loss_two_views<'t>(
    r1: Var<'t>,
    r2: Var<'t>,
    a1: &Matrix,
    a2: &Matrix,
    hard1: &[usize],
    hard2: &[usize],
    lambda_w: f64,
) -> Var<'t> {
    (deca_loss(r1, a1, hard1, lambda_w) + deca_loss(r2, a2, hard2, lambda_w)).scale(0.5)
}

/// Newman modularity of a hard partition:
/// `(1/2M) sum_{i,j} (A[i,j] - d_i d_j / 2M) [same community]`.
pub fn modularity(a: &Matrix, hard: &[usize]) -> Result<f64, CommunityError> {
    let n = a.rows();
    let degrees = a.row_sums();
    let two_m: f64 = degrees.iter().sum();
    if two_m == 0.0 {
        return Err(CommunityError::EmptyGraph);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if hard[i] == hard[j] {
                total += a[(i, j)] - degrees[i] * degrees[j] / two_m;
            }
        }
    }
    Ok(total / two_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::adjacency;
    use crate::similarity::SimilarityKind;
    use crate::tensor::{grad_check, Tape};
    use rand::{Rng, SeedableRng};

    fn triangle() -> Matrix {
        adjacency(3, &[(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn assignment_of_single_community_is_all_ones() {
        let sim = Similarity::new(SimilarityKind::ExponentCosine, 1.0);
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![1.0, 0.2], vec![-0.4, 0.8]]));
        let phi = tape.constant(Matrix::from_rows(&[vec![0.3, 0.9]]));
        let r = assignment_matrix(&sim, z, phi).unwrap().value();
        assert_eq!(r.shape(), (2, 1));
        assert!(r.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn assignment_matches_hand_computed_two_centroid_case() {
        // Node equal to centroid 1, orthogonal to centroid 2, tau = 1:
        // similarities (e, 1) -> R = (e/(e+1), 1/(e+1)).
        let sim = Similarity::new(SimilarityKind::ExponentCosine, 1.0);
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![1.0, 0.0]]));
        let phi = tape.constant(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        let r = assignment_matrix(&sim, z, phi).unwrap().value();
        let e = std::f64::consts::E;
        assert!((r[(0, 0)] - e / (e + 1.0)).abs() < 1e-6, "{}", r[(0, 0)]);
        assert!((r[(0, 1)] - 1.0 / (e + 1.0)).abs() < 1e-6, "{}", r[(0, 1)]);
        assert!((r[(0, 0)] - 0.731059).abs() < 1e-6);
        assert!((r[(0, 1)] - 0.268941).abs() < 1e-6);
    }

    #[test]
    fn equidistant_node_gets_uniform_assignment() {
        let sim = Similarity::new(SimilarityKind::GaussianRbf, 0.8);
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![0.0, 0.0]]));
        let phi = tape.constant(Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
        ]));
        let r = assignment_matrix(&sim, z, phi).unwrap().value();
        for k in 0..3 {
            assert!((r[(0, k)] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_similarities_leaves_assignment_unchanged() {
        // Gaussian RBF scaled by a constant factor cancels in normalization,
        // so R, hard, d(k) and modularity are all unchanged.
        let tape = Tape::new();
        let s = Matrix::from_rows(&[vec![0.4, 1.2, 0.1], vec![2.0, 0.5, 0.5]]);
        let r1 = tape.constant(s.clone()).row_normalize_sum().value();
        let r2 = tape.constant(s.scale(7.3)).row_normalize_sum().value();
        for i in 0..2 {
            for k in 0..3 {
                assert!((r1[(i, k)] - r2[(i, k)]).abs() < 1e-12);
            }
        }
        assert_eq!(r1.row_argmax(), r2.row_argmax());
    }

    #[test]
    fn triangle_community_is_fully_dense() {
        assert_eq!(edge_density(&triangle(), &[0, 0, 0], 0), 1.0);
    }

    #[test]
    fn path_community_density() {
        // 3-node path: 4 ordered adjacency entries over 6 slots.
        let a = adjacency(3, &[(0, 1), (1, 2)]);
        let d = edge_density(&a, &[0, 0, 0], 0);
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_community_has_zero_density() {
        let a = adjacency(2, &[(0, 1)]);
        assert_eq!(edge_density(&a, &[0, 1], 1), 0.0);
    }

    #[test]
    fn intra_density_on_empty_graph_is_zero() {
        let a = Matrix::zeros(4, 4);
        let r = Matrix::ones(4, 1);
        assert_eq!(intra_density_naive(&a, &r, &[0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn intra_density_of_triangle_single_community() {
        // Off-diagonal terms cancel (A=1, d=1); the 3 diagonal terms each
        // pay -d(k) = -1, so the total is -3/3 = -1.
        let r = Matrix::ones(3, 1);
        let got = intra_density_naive(&triangle(), &r, &[0, 0, 0]);
        assert!((got + 1.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn intra_density_of_two_pure_edge_communities() {
        let a = adjacency(4, &[(0, 1), (2, 3)]);
        let r = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let got = intra_density_naive(&a, &r, &[0, 0, 1, 1]);
        assert!((got + 1.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn inter_density_trivial_cases() {
        let a = adjacency(4, &[(0, 1), (2, 3)]);
        // Everyone in one community: no k1 != k2 mass.
        assert_eq!(inter_density_naive(&a, &Matrix::ones(4, 1)), 0.0);
        // Two pure communities with no cross edges.
        let r = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ]);
        assert_eq!(inter_density_naive(&a, &r), 0.0);
    }

    #[test]
    fn inter_density_of_k4_split_in_halves() {
        let a = adjacency(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let r = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let got = inter_density_naive(&a, &r);
        assert!((got - 8.0 / 12.0).abs() < 1e-12, "got {got}");
    }

    fn random_soft_assignment(n: usize, k: usize, rng: &mut impl Rng) -> Matrix {
        let raw = Matrix::from_fn(n, k, |_, _| rng.gen_range(0.01..1.0));
        Matrix::from_fn(n, k, |i, j| {
            let s: f64 = raw.row(i).iter().sum();
            raw[(i, j)] / s
        })
    }

    fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Matrix {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        adjacency(n, &edges)
    }

    #[test]
    fn vectorized_inter_matches_naive_and_intra_is_a_lower_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let n = rng.gen_range(3..20);
            let k = rng.gen_range(1..=5);
            let a = random_graph(n, 0.3, &mut rng);
            let r = random_soft_assignment(n, k, &mut rng);
            let hard = r.row_argmax();
            let naive_inter = inter_density_naive(&a, &r);
            let vec_inter = inter_density_vectorized(&a, &r);
            assert!(
                (naive_inter - vec_inter).abs() <= 1e-9,
                "inter mismatch: {naive_inter} vs {vec_inter}"
            );
            let naive_intra = intra_density_naive(&a, &r, &hard);
            let bound = intra_lower_bound_vectorized(&a, &r, &hard);
            assert!(
                bound <= naive_intra + 1e-12,
                "bound {bound} exceeds naive {naive_intra}"
            );
        }
    }

    #[test]
    fn deca_loss_composes_the_vectorized_terms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = random_graph(8, 0.4, &mut rng);
        let r_val = random_soft_assignment(8, 3, &mut rng);
        let hard = r_val.row_argmax();
        let lambda_w = 0.7;
        let tape = Tape::new();
        let r = tape.constant(r_val.clone());
        let loss = deca_loss(r, &a, &hard, lambda_w).item();
        let expect = lambda_w * inter_density_vectorized(&a, &r_val)
            - intra_lower_bound_vectorized(&a, &r_val, &hard);
        assert!((loss - expect).abs() < 1e-12, "{loss} vs {expect}");
    }

    #[test]
    fn single_community_loss_closed_form() {
        // K = 1: no inter mass, so the loss is the negated intra bound
        // -(sum(A) - N^2 * dmax) / N over the all-ones assignment.
        let a = triangle();
        let tape = Tape::new();
        let r = tape.constant(Matrix::ones(3, 1));
        let hard = vec![0, 0, 0];
        let loss = deca_loss(r, &a, &hard, 1.0).item();
        let dmax = edge_density(&a, &hard, 0);
        let expect = -(a.sum() - 9.0 * dmax) / 3.0;
        assert!((loss - expect).abs() < 1e-12, "{loss} vs {expect}");
    }

    #[test]
    fn two_view_loss_is_the_mean_of_the_views() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let a1 = random_graph(6, 0.4, &mut rng);
        let a2 = random_graph(6, 0.5, &mut rng);
        let r1v = random_soft_assignment(6, 3, &mut rng);
        let r2v = random_soft_assignment(6, 3, &mut rng);
        let h1 = r1v.row_argmax();
        let h2 = r2v.row_argmax();

        let tape = Tape::new();
        let r1 = tape.constant(r1v.clone());
        let r2 = tape.constant(r2v.clone());
        let both = deca_loss_two_views(r1, r2, &a1, &a2, &h1, &h2, 0.9).item();
        let l1 = deca_loss(r1, &a1, &h1, 0.9).item();
        let l2 = deca_loss(r2, &a2, &h2, 0.9).item();
        assert!((both - 0.5 * (l1 + l2)).abs() < 1e-12);

        // Identical views reduce to the single-view loss; swapping is a no-op.
        let same = deca_loss_two_views(r1, r1, &a1, &a1, &h1, &h1, 0.9).item();
        assert!((same - l1).abs() < 1e-12);
        let swapped = deca_loss_two_views(r2, r1, &a2, &a1, &h2, &h1, 0.9).item();
        assert!((swapped - both).abs() < 1e-12);
    }

    #[test]
    fn deca_loss_gradients_match_finite_differences() {
        // Composite check through the assignment: loss(Z, Phi) on a small
        // graph, with the hard assignment held fixed.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = random_graph(4, 0.6, &mut rng);
        let z = Matrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0));
        let phi = Matrix::from_fn(2, 3, |_, _| rng.gen_range(-1.0..1.0));
        let sim = Similarity::new(SimilarityKind::ExponentCosine, 0.5);

        let hard = {
            let tape = Tape::new();
            let r = assignment_matrix(&sim, tape.constant(z.clone()), tape.constant(phi.clone()))
                .unwrap();
            r.value().row_argmax()
        };
        let report = grad_check(
            |_tape, vars| {
                let r = assignment_matrix(&sim, vars[0], vars[1])?;
                Ok(deca_loss(r, &a, &hard, 1.0))
            },
            &[z, phi],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn planted_partition_has_zero_inter_density() {
        // SBM with p_out = 0 split by its blocks: no cross-community edges.
        let g = crate::sbm::sbm_generate(&crate::sbm::SbmConfig {
            block_sizes: vec![6, 6],
            p_in: 0.8,
            p_out: 0.0,
            feature_dim: 4,
            signal: 0.5,
            seed: 23,
        })
        .unwrap();
        let a = g.adjacency();
        let labels = g.labels().unwrap();
        let r = Matrix::from_fn(12, 2, |i, j| if labels[i] == j { 1.0 } else { 0.0 });
        assert_eq!(inter_density_naive(&a, &r), 0.0);
        assert!(inter_density_vectorized(&a, &r).abs() < 1e-12);
    }

    #[test]
    fn modularity_whole_graph_is_zero() {
        let a = adjacency(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let m = modularity(&a, &[0; 5]).unwrap();
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn modularity_of_two_disjoint_triangles_is_half() {
        let a = adjacency(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let m = modularity(&a, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((m - 0.5).abs() < 1e-12, "got {m}");
    }

    #[test]
    fn modularity_of_fully_split_triangle() {
        let m = modularity(&triangle(), &[0, 1, 2]).unwrap();
        assert!((m + 1.0 / 3.0).abs() < 1e-12, "got {m}");
    }

    #[test]
    fn modularity_of_empty_graph_errors() {
        let a = Matrix::zeros(3, 3);
        assert!(matches!(
            modularity(&a, &[0, 0, 0]),
            Err(CommunityError::EmptyGraph)
        ));
    }

    #[test]
    fn hard_assignment_ties_break_low() {
        let state = CommunityState::from_soft(Matrix::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]]));
        assert_eq!(state.hard(), &[0, 1]);
        assert_eq!(state.num_communities(), 2);
    }
}
