//! Contrastive objectives: node contrast, reweighted community
//! cross-contrast and the decaying joint combination.
//!
//! Node contrast is an InfoNCE over cross-view node pairs: the positive for
//! node i is the same node in the other view, the negatives are every other
//! node of the other view (cross-view only). Community contrast pairs each
//! node with its nearest centroid of the *other* view and down-weights
//! negative centroids by an RBF factor so nearby community pairs matter
//! more.
//!
//! Both losses average a per-node `-log(ratio)` over nodes, so every ratio
//! is at most one and the losses are nonnegative, and hyperparameters
//! transfer across graph sizes.

use crate::matrix::Matrix;
use crate::similarity::{sq_dist_matrix, Similarity};
use crate::tensor::{TensorError, Var};

/// One direction of the node-level InfoNCE between same-shape views:
/// `-(1/N) sum_i log( S[i,i] / sum_j S[i,j] )` over the similarity matrix.
fn info_nce_direction(s: Var<'_>) -> Var<'_> {
    let (n, m) = s.shape();
    assert_eq!(
        n, m,
        "node contrast requires square similarity, got {n}x{m}"
    );
    let eye = s.tape().constant(Matrix::identity(n));
    let pos = s.hadamard(eye).row_sum().log();
    let all = s.row_sum().log();
    pos.sub(all).mean_all().neg()
}

/// Symmetric node contrast between two same-shape representation matrices.
pub fn node_contrast_loss<'t>(
    sim: &Similarity,
    z1: Var<'t>,
    z2: Var<'t>,
) -> Result<Var<'t>, TensorError> {
    assert_eq!(
        z1.shape(),
        z2.shape(),
        "node contrast shape mismatch: {:?} vs {:?}",
        z1.shape(),
        z2.shape()
    );
    // Both similarities are symmetric in their arguments, so the reverse
    // direction is the transpose of the same matrix.
    let s = sim.matrix(z1, z2)?;
    Ok(info_nce_direction(s)
        .add(info_nce_direction(s.t()))
        .scale(0.5))
}

/// RBF attention weight between a node representation and a centroid:
/// `exp(-gamma ||z - phi||^2)`.
pub fn rbf_weight(z: &[f64], phi: &[f64], gamma: f64) -> f64 {
    assert_eq!(
        z.len(),
        phi.len(),
        "rbf weight dim mismatch: {} vs {}",
        z.len(),
        phi.len()
    );
    let sq: f64 = z.iter().zip(phi).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Nearest-centroid assignment of each row of `z` against `centroids`,
/// by similarity. This is the positive-selection step and is discrete:
/// gradients never flow through it.
pub fn assign_to_nearest(
    sim: &Similarity,
    z: &Matrix,
    centroids: &Matrix,
) -> Result<Vec<usize>, TensorError> {
    Ok(sim.matrix_plain(z, centroids)?.row_argmax())
}

/// One direction of the community contrast with a fixed positive
/// assignment: node i is contrasted positively against `assign[i]` and
/// negatively, with RBF reweighting, against the remaining centroids.
/// With a single community there are no negatives and the loss is zero.
pub fn community_contrast_term<'t>(
    sim: &Similarity,
    z: Var<'t>,
    centroids: Var<'t>,
    gamma: f64,
    assign: &[usize],
) -> Result<Var<'t>, TensorError> {
    assert!(gamma >= 0.0, "gamma must be nonnegative, got {gamma}");
    let (n, _) = z.shape();
    let (k, _) = centroids.shape();
    assert_eq!(
        assign.len(),
        n,
        "assignment covers {} of {n} nodes",
        assign.len()
    );
    if k == 1 {
        log::warn!("community contrast with a single community has no negatives; loss is 0");
    }

    let tape = z.tape();
    let pos_mask = tape.constant(Matrix::from_fn(n, k, |i, c| {
        if assign[i] == c {
            1.0
        } else {
            0.0
        }
    }));
    let neg_mask = tape.constant(Matrix::from_fn(n, k, |i, c| {
        if assign[i] == c {
            0.0
        } else {
            1.0
        }
    }));

    let s = sim.matrix(z, centroids)?;
    let w = sq_dist_matrix(z, centroids).scale(-gamma).exp();
    let pos = s.hadamard(pos_mask).row_sum();
    let weighted_neg = s.hadamard(w).hadamard(neg_mask).row_sum();
    let denom = pos.add(weighted_neg);
    Ok(pos.log().sub(denom.log()).mean_all().neg())
}

/// Symmetric cross-view community contrast: each view's representations
/// against the other view's centroids, positives chosen by nearest centroid
/// in the target space.
pub fn community_contrast<'t>(
    sim: &Similarity,
    z1: Var<'t>,
    z2: Var<'t>,
    centroids1: Var<'t>,
    centroids2: Var<'t>,
    gamma: f64,
) -> Result<Var<'t>, TensorError> {
    let assign1 = z1.with_value(|z| centroids2.with_value(|c| assign_to_nearest(sim, z, c)))?;
    let assign2 = z2.with_value(|z| centroids1.with_value(|c| assign_to_nearest(sim, z, c)))?;
    let l1 = community_contrast_term(sim, z1, centroids2, gamma, &assign1)?;
    let l2 = community_contrast_term(sim, z2, centroids1, gamma, &assign2)?;
    Ok(l1.add(l2).scale(0.5))
}

/// Decay coefficient `alpha(t) = exp(-t / eta)`: full weight on community
/// detection at t = 0, shifting smoothly toward community contrast.
pub fn alpha(t: f64, eta: f64) -> f64 {
    assert!(t >= 0.0, "epoch must be nonnegative, got {t}");
    assert!(eta > 0.0, "eta must be positive, got {eta}");
    (-t / eta).exp()
}

/// Joint objective `L_node + a * L_deca + (1 - a) * L_com` at a given
/// decay weight.
pub fn combine_with_alpha<'t>(l_node: Var<'t>, l_deca: Var<'t>, l_com: Var<'t>, a: f64) -> Var<'t> {
    l_node.add(l_deca.scale(a)).add(l_com.scale(1.0 - a))
}

/// Joint objective with the decay evaluated at epoch `t`.
pub fn joint_loss<'t>(
    l_node: Var<'t>,
    l_deca: Var<'t>,
    l_com: Var<'t>,
    t: f64,
    eta: f64,
) -> Var<'t> {
    combine_with_alpha(l_node, l_deca, l_com, alpha(t, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityKind;
    use crate::tensor::{grad_check, Tape};
    use rand::{Rng, SeedableRng};

    const TWO_NODE_NCE: f64 = 0.313_261_687_5; // -ln(e / (e + 1))

    fn expc(tau: f64) -> Similarity {
        Similarity::new(SimilarityKind::ExponentCosine, tau)
    }

    #[test]
    fn orthonormal_two_node_case_matches_hand_value() {
        // Z1 = Z2 = I2, tau = 1: each row similarity (e, 1), per-direction
        // loss -log(e/(e+1)).
        let tape = Tape::new();
        let z = tape.constant(Matrix::identity(2));
        let loss = node_contrast_loss(&expc(1.0), z, z).unwrap().item();
        assert!((loss - TWO_NODE_NCE).abs() < 1e-6, "got {loss}");
    }

    #[test]
    fn node_contrast_is_symmetric_in_its_views() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let tape = Tape::new();
        let z1 = tape.constant(Matrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0)));
        let z2 = tape.constant(Matrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0)));
        let sim = expc(0.4);
        let a = node_contrast_loss(&sim, z1, z2).unwrap().item();
        let b = node_contrast_loss(&sim, z2, z1).unwrap().item();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn single_node_contrast_is_zero() {
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![0.3, 0.9]]));
        let loss = node_contrast_loss(&expc(0.7), z, z).unwrap().item();
        assert!(loss.abs() < 1e-9, "got {loss}");
    }

    #[test]
    fn node_contrast_is_nonnegative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for kind in [SimilarityKind::ExponentCosine, SimilarityKind::GaussianRbf] {
            for _ in 0..10 {
                let n = rng.gen_range(1..8);
                let d = rng.gen_range(2..5);
                let tape = Tape::new();
                let z1 = tape.constant(Matrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0)));
                let z2 = tape.constant(Matrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0)));
                let sim = Similarity::new(kind, 0.5);
                let loss = node_contrast_loss(&sim, z1, z2).unwrap().item();
                assert!(loss >= -1e-9, "{kind:?} loss {loss}");
            }
        }
    }

    #[test]
    fn rbf_weight_cases() {
        assert_eq!(rbf_weight(&[0.3, 0.4], &[0.3, 0.4], 2.0), 1.0);
        assert_eq!(rbf_weight(&[5.0, 1.0], &[-3.0, 2.0], 0.0), 1.0);
        // gamma = 2e-5 at squared distance 1e5 -> e^-2.
        let z = [(1e5f64).sqrt(), 0.0];
        let got = rbf_weight(&z, &[0.0, 0.0], 2e-5);
        assert!((got - (-2.0f64).exp()).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn distant_wrong_centroids_with_large_gamma_vanish() {
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![10.0, 0.0]]));
        let phi = tape.constant(Matrix::from_rows(&[vec![10.0, 0.1], vec![-50.0, 40.0]]));
        let sim = Similarity::new(SimilarityKind::GaussianRbf, 10.0);
        let loss = community_contrast_term(&sim, z, phi, 5.0, &[0])
            .unwrap()
            .item();
        assert!(loss.abs() < 1e-9, "got {loss}");
    }

    #[test]
    fn single_node_two_centroids_matches_hand_value() {
        // delta(z, phi0) = e, delta(z, phi1) = 1, gamma = 0:
        // loss = -log(e / (e + 1)).
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![1.0, 0.0]]));
        let phi = tape.constant(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        let loss = community_contrast_term(&expc(1.0), z, phi, 0.0, &[0])
            .unwrap()
            .item();
        assert!((loss - TWO_NODE_NCE).abs() < 1e-6, "got {loss}");
    }

    #[test]
    fn centroid_order_does_not_change_the_loss() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let z_val = Matrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let phi_val = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let perm = [2usize, 0, 1];
        let phi_perm = Matrix::from_fn(3, 3, |i, j| phi_val[(perm[i], j)]);
        let sim = expc(0.6);

        let run = |phi: &Matrix| {
            let tape = Tape::new();
            let z = tape.constant(z_val.clone());
            let c = tape.constant(phi.clone());
            let assign = assign_to_nearest(&sim, &z_val, phi).unwrap();
            community_contrast_term(&sim, z, c, 1e-2, &assign)
                .unwrap()
                .item()
        };
        assert!((run(&phi_val) - run(&phi_perm)).abs() < 1e-12);
    }

    #[test]
    fn single_community_contrast_is_zero() {
        let tape = Tape::new();
        let z = tape.constant(Matrix::from_rows(&[vec![0.4, 1.0], vec![-0.5, 0.2]]));
        let phi = tape.constant(Matrix::from_rows(&[vec![0.1, 0.8]]));
        let loss = community_contrast_term(&expc(0.5), z, phi, 1.0, &[0, 0])
            .unwrap()
            .item();
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn community_contrast_is_nonnegative_and_symmetricized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let tape = Tape::new();
        let z1 = tape.constant(Matrix::from_fn(6, 4, |_, _| rng.gen_range(-1.0..1.0)));
        let z2 = tape.constant(Matrix::from_fn(6, 4, |_, _| rng.gen_range(-1.0..1.0)));
        let p1 = tape.constant(Matrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0)));
        let p2 = tape.constant(Matrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0)));
        let sim = expc(0.4);
        let loss = community_contrast(&sim, z1, z2, p1, p2, 1e-3)
            .unwrap()
            .item();
        assert!(loss >= 0.0);
        let swapped = community_contrast(&sim, z2, z1, p2, p1, 1e-3)
            .unwrap()
            .item();
        assert!((loss - swapped).abs() < 1e-12);
    }

    #[test]
    fn alpha_schedule() {
        assert_eq!(alpha(0.0, 500.0), 1.0);
        let e_inv = (-1.0f64).exp();
        assert!((alpha(500.0, 500.0) - e_inv).abs() < 1e-12);
        let a1 = alpha(500.0, 500.0);
        let a2 = alpha(1000.0, 500.0);
        assert!((a2 - a1 * a1).abs() < 1e-12);
        assert!(alpha(3.0, 500.0) < alpha(2.0, 500.0));
    }

    #[test]
    fn joint_loss_weighting() {
        let tape = Tape::new();
        let one = tape.constant(Matrix::scalar(1.0));
        // t = 0: alpha = 1, community term has zero weight.
        let at0 = joint_loss(one, one, tape.constant(Matrix::scalar(100.0)), 0.0, 500.0).item();
        assert!((at0 - 2.0).abs() < 1e-12);
        // t -> infinity: alpha -> 0.
        let late = joint_loss(one, tape.constant(Matrix::scalar(100.0)), one, 1e9, 500.0).item();
        assert!((late - 2.0).abs() < 1e-9);
        // t = eta with all components 1: 1 + e^-1 + (1 - e^-1) = 2.
        let at_eta = joint_loss(one, one, one, 500.0, 500.0).item();
        assert!((at_eta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_weights_sum_to_one_for_all_t() {
        for t in [0.0, 1.0, 10.0, 250.0, 500.0, 5000.0] {
            let a = alpha(t, 500.0);
            assert!(a > 0.0 && a <= 1.0);
            assert!((a + (1.0 - a) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn contrast_gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let z1 = Matrix::from_fn(5, 4, |_, _| rng.gen_range(-1.0..1.0));
        let z2 = Matrix::from_fn(5, 4, |_, _| rng.gen_range(-1.0..1.0));
        let phi1 = Matrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let phi2 = Matrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        for kind in [SimilarityKind::ExponentCosine, SimilarityKind::GaussianRbf] {
            let sim = Similarity::new(kind, 0.5);
            let assign1 = assign_to_nearest(&sim, &z1, &phi2).unwrap();
            let assign2 = assign_to_nearest(&sim, &z2, &phi1).unwrap();
            let report = grad_check(
                |_tape, vars| {
                    let l_node = node_contrast_loss(&sim, vars[0], vars[1])?;
                    let l1 = community_contrast_term(&sim, vars[0], vars[3], 0.01, &assign1)?;
                    let l2 = community_contrast_term(&sim, vars[1], vars[2], 0.01, &assign2)?;
                    Ok(joint_loss(l_node, l1, l2, 7.0, 50.0))
                },
                &[z1.clone(), z2.clone(), phi1.clone(), phi2.clone()],
                1e-5,
                1e-4,
            )
            .unwrap();
            assert!(report.pass, "{kind:?}: max rel err {}", report.max_rel_err);
        }
    }
}
