//! Downstream evaluation: linear probe, K-means clustering, partition
//! scores, community diagnostics and multi-view confidence fusion.
//!
//! Entropy-based scores (NMI, class entropy) use the natural logarithm;
//! the base cancels inside NMI and is part of the contract for the class
//! entropy diagnostic.

use crate::community::edge_density;
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("training split contains a single class; the probe needs at least two")]
    SingleClassTrain,
    #[error("k-means needs 1 <= k <= n, got k={k} with n={n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("confidence {value} outside [0,1]")]
    BadConfidence { value: f64 },
}

/// Train/test node split over `n` nodes.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Random split with `ceil(fraction * n)` training nodes. Both sides
    /// must end up non-empty.
    pub fn random(n: usize, fraction: f64, seed: u64) -> Result<Self, EvalError> {
        if !(0.0 < fraction && fraction < 1.0) {
            return Err(EvalError::Split(format!(
                "fraction must be in (0,1), got {fraction}"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut stream_rng(seed, 0));
        let cut = ((fraction * n as f64).ceil() as usize).max(1);
        if cut >= n {
            return Err(EvalError::Split(format!(
                "fraction {fraction} leaves no test nodes for n={n}"
            )));
        }
        let (train, test) = idx.split_at(cut);
        Ok(Split {
            train: train.to_vec(),
            test: test.to_vec(),
        })
    }
}

/// Softmax-regression probe over frozen embeddings. Fitting only ever sees
/// the training rows and their labels.
#[derive(Clone, Debug)]
pub struct LinearProbe {
    weights: Matrix,
    bias: Matrix,
}

pub const PROBE_STEPS: usize = 500;
pub const PROBE_LR: f64 = 0.01;
pub const PROBE_L2: f64 = 1e-4;

fn row_softmax_plain(logits: &Matrix) -> Matrix {
    Matrix::from_fn(logits.rows(), logits.cols(), |i, j| {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
        (logits[(i, j)] - max).exp() / denom
    })
}

impl LinearProbe {
    /// Fit by full-batch gradient descent: fixed 500 steps, lr 0.01,
    /// L2 1e-4, zero init.
    pub fn fit(
        z: &Matrix,
        train_idx: &[usize],
        train_labels: &[usize],
        num_classes: usize,
    ) -> Result<Self, EvalError> {
        if train_idx.is_empty() {
            return Err(EvalError::Empty("training split"));
        }
        if train_idx.len() != train_labels.len() {
            return Err(EvalError::LengthMismatch {
                left: train_idx.len(),
                right: train_labels.len(),
            });
        }
        let distinct: std::collections::BTreeSet<_> = train_labels.iter().collect();
        if distinct.len() < 2 {
            return Err(EvalError::SingleClassTrain);
        }

        let d = z.cols();
        let n = train_idx.len();
        let x = Matrix::from_fn(n, d, |i, j| z[(train_idx[i], j)]);
        let y = Matrix::from_fn(
            n,
            num_classes,
            |i, c| {
                if train_labels[i] == c {
                    1.0
                } else {
                    0.0
                }
            },
        );

        let mut w = Matrix::zeros(d, num_classes);
        let mut b = Matrix::zeros(1, num_classes);
        let xt = x.transpose();
        for _ in 0..PROBE_STEPS {
            let logits = x.matmul(&w);
            let logits = Matrix::from_fn(n, num_classes, |i, c| logits[(i, c)] + b[(0, c)]);
            let probs = row_softmax_plain(&logits);
            let err = probs.sub(&y);
            let gw = xt
                .matmul(&err)
                .scale(1.0 / n as f64)
                .add(&w.scale(PROBE_L2));
            let gb = Matrix::new(1, num_classes, err.col_sums()).scale(1.0 / n as f64);
            w = w.sub(&gw.scale(PROBE_LR));
            b = b.sub(&gb.scale(PROBE_LR));
        }
        Ok(LinearProbe {
            weights: w,
            bias: b,
        })
    }

    /// Argmax class and max-softmax confidence for the given rows.
    pub fn predict(&self, z: &Matrix, idx: &[usize]) -> (Vec<usize>, Vec<f64>) {
        let c = self.weights.cols();
        let d = self.weights.rows();
        let logits = Matrix::from_fn(idx.len(), c, |i, k| {
            (0..d)
                .map(|j| z[(idx[i], j)] * self.weights[(j, k)])
                .sum::<f64>()
                + self.bias[(0, k)]
        });
        let probs = row_softmax_plain(&logits);
        let pred = probs.row_argmax();
        let conf = (0..idx.len())
            .map(|i| {
                probs
                    .row(i)
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        (pred, conf)
    }
}

/// Probe outcome on the test side of a split.
#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub predictions: Vec<usize>,
    pub confidences: Vec<f64>,
}

/// Fit on the split's training rows, predict the test rows.
pub fn probe_fit_predict(
    z: &Matrix,
    labels: &[usize],
    split: &Split,
    num_classes: usize,
) -> Result<ProbeOutcome, EvalError> {
    if labels.len() != z.rows() {
        return Err(EvalError::LengthMismatch {
            left: labels.len(),
            right: z.rows(),
        });
    }
    let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let probe = LinearProbe::fit(z, &split.train, &train_labels, num_classes)?;
    let (predictions, confidences) = probe.predict(z, &split.test);
    Ok(ProbeOutcome {
        predictions,
        confidences,
    })
}

/// Micro and macro F1. Micro-F1 equals accuracy in single-label multiclass
/// classification; macro averages per-class F1 with absent classes scoring
/// zero.
pub fn f1_scores(pred: &[usize], truth: &[usize]) -> Result<(f64, f64), EvalError> {
    if pred.is_empty() {
        return Err(EvalError::Empty("predictions"));
    }
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let classes = pred.iter().chain(truth.iter()).copied().max().unwrap() + 1;
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let micro = tp.iter().sum::<usize>() as f64 / pred.len() as f64;
    let macro_f1 = (0..classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum::<f64>()
        / classes as f64;
    Ok((micro, macro_f1))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding, 10 restarts, best inertia.
/// Deterministic per seed.
pub fn kmeans(z: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let n = z.rows();
    if k == 0 || k > n {
        return Err(EvalError::TooManyClusters { k, n });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..10 {
        let mut rng = stream_rng(seed, restart);
        let (assign, inertia) = kmeans_once(z, k, &mut rng);
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, assign));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn kmeans_once(z: &Matrix, k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = z.rows();
    let d = z.cols();

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(z.row(rng.gen_range(0..n)).to_vec());
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass is zero (duplicate points): pick uniformly.
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(z.row(next).to_vec());
        for i in 0..n {
            let dd = sq_dist(z.row(i), centers.last().unwrap());
            if dd < dist[i] {
                dist[i] = dd;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for iter in 0..100 {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dd = sq_dist(z.row(i), center);
                if dd < best_d {
                    best_d = dd;
                    best_c = c;
                }
            }
            if *slot != best_c {
                *slot = best_c;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; d]; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for j in 0..d {
                sums[assign[i]][j] += z[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseat an empty cluster on the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(z.row(a), &centers[assign[a]])
                            .partial_cmp(&sq_dist(z.row(b), &centers[assign[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = z.row(far).to_vec();
            } else {
                for j in 0..d {
                    centers[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
    }
    let inertia: f64 = (0..n).map(|i| sq_dist(z.row(i), &centers[assign[i]])).sum();
    (assign, inertia)
}

fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let ka = a.iter().copied().max().unwrap_or(0) + 1;
    let kb = b.iter().copied().max().unwrap_or(0) + 1;
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    (table, rows, cols)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// (NMI, ARI) between a predicted clustering and reference labels.
///
/// NMI is `2 I(a;b) / (H(a) + H(b))` with natural-log entropies; ARI is the
/// pair-counting adjusted Rand index. Identical degenerate partitions
/// (both single-cluster, or both all-singletons) score 1.
pub fn clustering_scores(pred: &[usize], truth: &[usize]) -> Result<(f64, f64), EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.len() < 2 {
        return Err(EvalError::Degenerate(
            "clustering scores need at least two points",
        ));
    }
    let n = pred.len() as f64;
    let (table, rows, cols) = contingency(pred, truth);

    let h_pred = entropy(&rows, n);
    let h_truth = entropy(&cols, n);
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let pij = nij as f64 / n;
                mi += pij * ((n * nij as f64) / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let nmi = if h_pred + h_truth == 0.0 {
        1.0 // both partitions are a single cluster: identical
    } else {
        2.0 * mi / (h_pred + h_truth)
    };

    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&nij| choose2(nij)).sum();
    let sum_a: f64 = rows.iter().map(|&a| choose2(a)).sum();
    let sum_b: f64 = cols.iter().map(|&b| choose2(b)).sum();
    let expected = sum_a * sum_b / choose2(pred.len());
    let max_index = 0.5 * (sum_a + sum_b);
    let ari = if (max_index - expected).abs() < 1e-15 {
        1.0 // degenerate but identical partitions
    } else {
        (index - expected) / (max_index - expected)
    };
    Ok((nmi, ari))
}

/// Average per-community edge density `ED = mean_k d(k)`. Empty or
/// singleton communities contribute zero.
pub fn edge_density_score(a: &Matrix, hard: &[usize], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (0..k).map(|c| edge_density(a, hard, c)).sum::<f64>() / k as f64
}

/// Average class entropy of the label distribution inside each community,
/// natural log; empty communities contribute zero.
pub fn class_entropy_score(hard: &[usize], labels: &[usize], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..hard.len()).filter(|&i| hard[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let mut counts = vec![0usize; num_classes];
        for &i in &members {
            counts[labels[i]] += 1;
        }
        total += entropy(&counts, members.len() as f64);
    }
    total / k as f64
}

/// Per-node prediction of the most confident view; ties break toward the
/// lowest view index.
pub fn fuse_predictions(views: &[(Vec<usize>, Vec<f64>)]) -> Result<Vec<usize>, EvalError> {
    let first = views.first().ok_or(EvalError::Empty("no views to fuse"))?;
    let n = first.0.len();
    for (pred, conf) in views {
        if pred.len() != n || conf.len() != n {
            return Err(EvalError::LengthMismatch {
                left: pred.len(),
                right: n,
            });
        }
        for &c in conf {
            if !(0.0..=1.0).contains(&c) {
                return Err(EvalError::BadConfidence { value: c });
            }
        }
    }
    Ok((0..n)
        .map(|i| {
            let mut best_view = 0;
            for (v, (_, conf)) in views.iter().enumerate().skip(1) {
                if conf[i] > views[best_view].1[i] {
                    best_view = v;
                }
            }
            views[best_view].0[i]
        })
        .collect())
}
