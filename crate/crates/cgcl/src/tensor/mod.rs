//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every primitive applied to its [`Var`] handles as a
//! Wengert list; [`Tape::backward`] replays the list in reverse and
//! accumulates gradients into every `requires_grad` ancestor of the loss.
//! The loss graph is rebuilt from scratch each training epoch (augmentations
//! change the adjacency), so tapes are cheap, short-lived values.
//!
//! Numeric guards, part of the loss contract: `log` adds a floor of
//! `GUARD_EPS` to its argument, and row-wise normalizations clamp their
//! denominators below at `GUARD_EPS` so that rows of strictly positive input
//! still sum to exactly one.
//!
//! Shape mismatches are programming errors and panic with both shapes in the
//! message; runtime numeric failures (non-scalar loss, non-finite values)
//! surface as [`TensorError`].

mod adam;
mod gradcheck;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckReport};

use crate::matrix::Matrix;
use std::cell::RefCell;
use thiserror::Error;

/// Additive floor for `log`, and lower clamp for normalization denominators.
pub const GUARD_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("backward requires a scalar loss, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("non-finite value encountered in `{op}` during backward")]
    NonFinite { op: &'static str },
    #[error("zero vector in row {row} of `{context}`: cosine similarity undefined")]
    ZeroVector { context: &'static str, row: usize },
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Neg(usize),
    Exp(usize),
    Log(usize),
    Relu(usize),
    LeakyRelu(usize, f64),
    RowSum(usize),
    RowMean(usize),
    SumAll(usize),
    MeanAll(usize),
    Trace(usize),
    RowSqNorms(usize),
    RowL2Normalize(usize),
    RowSoftmax(usize),
    RowNormalizeSum(usize),
    AddRowBroadcast(usize, usize),
    AddColBroadcast(usize, usize),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Neg(..) => "neg",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Relu(..) => "relu",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::RowSum(..) => "row_sum",
            Op::RowMean(..) => "row_mean",
            Op::SumAll(..) => "sum_all",
            Op::MeanAll(..) => "mean_all",
            Op::Trace(..) => "trace",
            Op::RowSqNorms(..) => "row_sq_norms",
            Op::RowL2Normalize(..) => "row_l2_normalize",
            Op::RowSoftmax(..) => "row_softmax",
            Op::RowNormalizeSum(..) => "row_normalize_sum",
            Op::AddRowBroadcast(..) => "add_row_broadcast",
            Op::AddColBroadcast(..) => "add_col_broadcast",
        }
    }
}

struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    requires_grad: bool,
    op: Op,
}

/// Computation tape. Create one per loss evaluation.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Record a trainable leaf.
    pub fn var(&self, value: Matrix) -> Var<'_> {
        self.push(value, true, Op::Leaf)
    }

    /// Record a constant (no gradient flows into it).
    pub fn constant(&self, value: Matrix) -> Var<'_> {
        self.push(value, false, Op::Leaf)
    }

    fn push(&self, value: Matrix, requires_grad: bool, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var {
            tape: self,
            idx: nodes.len() - 1,
        }
    }

    fn record(&self, value: Matrix, parents: &[usize], op: Op) -> Var<'_> {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            parents.iter().any(|&p| nodes[p].requires_grad)
        };
        self.push(value, requires_grad, op)
    }

    /// Reverse pass from a scalar loss. Populates gradients on every
    /// `requires_grad` ancestor; the tape order is already topological.
    pub fn backward(&self, loss: Var<'_>) -> Result<(), TensorError> {
        assert!(
            std::ptr::eq(loss.tape, self),
            "backward called with a Var from another tape"
        );
        let mut nodes = self.nodes.borrow_mut();
        let (rows, cols) = nodes[loss.idx].value.shape();
        if (rows, cols) != (1, 1) {
            return Err(TensorError::NonScalarLoss { rows, cols });
        }

        let n = nodes.len();
        let mut grads: Vec<Option<Matrix>> = (0..n).map(|_| None).collect();
        grads[loss.idx] = Some(Matrix::scalar(1.0));

        for i in (0..=loss.idx).rev() {
            if !nodes[i].requires_grad {
                continue;
            }
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue, // not an ancestor of the loss
            };
            if !g.is_finite() {
                return Err(TensorError::NonFinite {
                    op: nodes[i].op.name(),
                });
            }
            let op = nodes[i].op.clone();
            propagate(&nodes, &mut grads, i, &op, &g);
            nodes[i].grad = Some(g);
        }
        Ok(())
    }
}

/// Accumulate `delta` into `grads[target]`, allocating on first touch.
fn accumulate(
    nodes: &[Node],
    grads: &mut [Option<Matrix>],
    target: usize,
    delta: &Matrix,
    scale: f64,
) {
    if !nodes[target].requires_grad {
        return;
    }
    let slot = grads[target].get_or_insert_with(|| {
        let (r, c) = nodes[target].value.shape();
        Matrix::zeros(r, c)
    });
    slot.add_assign_scaled(delta, scale);
}

fn propagate(nodes: &[Node], grads: &mut [Option<Matrix>], idx: usize, op: &Op, g: &Matrix) {
    match *op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let ga = g.matmul(&nodes[b].value.transpose());
            accumulate(nodes, grads, a, &ga, 1.0);
            let gb = nodes[a].value.transpose().matmul(g);
            accumulate(nodes, grads, b, &gb, 1.0);
        }
        Op::Transpose(a) => {
            accumulate(nodes, grads, a, &g.transpose(), 1.0);
        }
        Op::Add(a, b) => {
            accumulate(nodes, grads, a, g, 1.0);
            accumulate(nodes, grads, b, g, 1.0);
        }
        Op::Sub(a, b) => {
            accumulate(nodes, grads, a, g, 1.0);
            accumulate(nodes, grads, b, g, -1.0);
        }
        Op::Mul(a, b) => {
            accumulate(nodes, grads, a, &g.hadamard(&nodes[b].value), 1.0);
            accumulate(nodes, grads, b, &g.hadamard(&nodes[a].value), 1.0);
        }
        Op::Scale(a, c) => {
            accumulate(nodes, grads, a, g, c);
        }
        Op::Neg(a) => {
            accumulate(nodes, grads, a, g, -1.0);
        }
        Op::Exp(a) => {
            accumulate(nodes, grads, a, &g.hadamard(&nodes[idx].value), 1.0);
        }
        Op::Log(a) => {
            let ga = g.hadamard(&nodes[a].value.map(|x| 1.0 / (x + GUARD_EPS)));
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::Relu(a) => {
            let mask = nodes[a].value.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
            accumulate(nodes, grads, a, &g.hadamard(&mask), 1.0);
        }
        Op::LeakyRelu(a, slope) => {
            let mask = nodes[a].value.map(|x| if x > 0.0 { 1.0 } else { slope });
            accumulate(nodes, grads, a, &g.hadamard(&mask), 1.0);
        }
        Op::RowSum(a) => {
            let (r, c) = nodes[a].value.shape();
            let ga = Matrix::from_fn(r, c, |i, _| g[(i, 0)]);
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::RowMean(a) => {
            let (r, c) = nodes[a].value.shape();
            let inv = 1.0 / c as f64;
            let ga = Matrix::from_fn(r, c, |i, _| g[(i, 0)] * inv);
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::SumAll(a) => {
            let (r, c) = nodes[a].value.shape();
            accumulate(nodes, grads, a, &Matrix::ones(r, c), g.item());
        }
        Op::MeanAll(a) => {
            let (r, c) = nodes[a].value.shape();
            accumulate(
                nodes,
                grads,
                a,
                &Matrix::ones(r, c),
                g.item() / (r * c) as f64,
            );
        }
        Op::Trace(a) => {
            let n = nodes[a].value.rows();
            accumulate(nodes, grads, a, &Matrix::identity(n), g.item());
        }
        Op::RowSqNorms(a) => {
            let (r, c) = nodes[a].value.shape();
            let x = &nodes[a].value;
            let ga = Matrix::from_fn(r, c, |i, j| 2.0 * x[(i, j)] * g[(i, 0)]);
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::RowL2Normalize(a) => {
            // y_i = x_i / n_i with n_i = max(|x_i|, eps):
            // dL/dx_i = (g_i - y_i * <g_i, y_i>) / n_i
            let x = &nodes[a].value;
            let y = &nodes[idx].value;
            let (r, c) = x.shape();
            let mut ga = Matrix::zeros(r, c);
            for i in 0..r {
                let norm = x
                    .row(i)
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
                    .max(GUARD_EPS);
                let dot: f64 = (0..c).map(|j| g[(i, j)] * y[(i, j)]).sum();
                for j in 0..c {
                    ga[(i, j)] = (g[(i, j)] - y[(i, j)] * dot) / norm;
                }
            }
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::RowSoftmax(a) => {
            // dL/dx_i = (g_i - <g_i, y_i>) ⊙ y_i
            let y = &nodes[idx].value;
            let (r, c) = y.shape();
            let mut ga = Matrix::zeros(r, c);
            for i in 0..r {
                let dot: f64 = (0..c).map(|j| g[(i, j)] * y[(i, j)]).sum();
                for j in 0..c {
                    ga[(i, j)] = (g[(i, j)] - dot) * y[(i, j)];
                }
            }
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::RowNormalizeSum(a) => {
            // y_i = x_i / s_i with s_i = max(sum(x_i), eps):
            // dL/dx_i = (g_i - <g_i, y_i>) / s_i
            let x = &nodes[a].value;
            let y = &nodes[idx].value;
            let (r, c) = x.shape();
            let mut ga = Matrix::zeros(r, c);
            for i in 0..r {
                let s = x.row(i).iter().sum::<f64>().max(GUARD_EPS);
                let dot: f64 = (0..c).map(|j| g[(i, j)] * y[(i, j)]).sum();
                for j in 0..c {
                    ga[(i, j)] = (g[(i, j)] - dot) / s;
                }
            }
            accumulate(nodes, grads, a, &ga, 1.0);
        }
        Op::AddRowBroadcast(a, v) => {
            accumulate(nodes, grads, a, g, 1.0);
            let gv = Matrix::new(1, g.cols(), g.col_sums());
            accumulate(nodes, grads, v, &gv, 1.0);
        }
        Op::AddColBroadcast(a, v) => {
            accumulate(nodes, grads, a, g, 1.0);
            let gv = Matrix::new(g.rows(), 1, g.row_sums());
            accumulate(nodes, grads, v, &gv, 1.0);
        }
    }
}

impl<'t> Var<'t> {
    /// The tape this Var lives on, for minting constants next to it.
    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn shape(self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.idx].value.shape()
    }

    /// Clone of the forward value.
    pub fn value(self) -> Matrix {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    /// Read the forward value without cloning.
    pub fn with_value<R>(self, f: impl FnOnce(&Matrix) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.idx].value)
    }

    /// Scalar forward value of a 1x1 tensor.
    pub fn item(self) -> f64 {
        self.with_value(|v| v.item())
    }

    /// Gradient accumulated by the last `backward` pass, if any.
    pub fn grad(self) -> Option<Matrix> {
        self.tape.nodes.borrow()[self.idx].grad.clone()
    }

    pub fn requires_grad(self) -> bool {
        self.tape.nodes.borrow()[self.idx].requires_grad
    }

    fn unary(self, value: Matrix, op: Op) -> Var<'t> {
        self.tape.record(value, &[self.idx], op)
    }

    fn binary(self, rhs: Var<'t>, value: Matrix, op: Op) -> Var<'t> {
        assert!(
            std::ptr::eq(self.tape, rhs.tape),
            "cannot combine Vars from different tapes"
        );
        self.tape.record(value, &[self.idx, rhs.idx], op)
    }

    pub fn matmul(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| rhs.with_value(|b| a.matmul(b)));
        self.binary(rhs, value, Op::MatMul(self.idx, rhs.idx))
    }

    pub fn t(self) -> Var<'t> {
        let value = self.with_value(|a| a.transpose());
        self.unary(value, Op::Transpose(self.idx))
    }

    /// Elementwise product.
    pub fn hadamard(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| rhs.with_value(|b| a.hadamard(b)));
        self.binary(rhs, value, Op::Mul(self.idx, rhs.idx))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let value = self.with_value(|a| a.scale(c));
        self.unary(value, Op::Scale(self.idx, c))
    }

    pub fn exp(self) -> Var<'t> {
        let value = self.with_value(|a| a.map(f64::exp));
        self.unary(value, Op::Exp(self.idx))
    }

    /// Natural log with an additive floor of [`GUARD_EPS`].
    pub fn log(self) -> Var<'t> {
        let value = self.with_value(|a| a.map(|x| (x + GUARD_EPS).ln()));
        self.unary(value, Op::Log(self.idx))
    }

    pub fn relu(self) -> Var<'t> {
        let value = self.with_value(|a| a.map(|x| x.max(0.0)));
        self.unary(value, Op::Relu(self.idx))
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        let value = self.with_value(|a| a.map(|x| if x > 0.0 { x } else { slope * x }));
        self.unary(value, Op::LeakyRelu(self.idx, slope))
    }

    /// Column vector of row sums.
    pub fn row_sum(self) -> Var<'t> {
        let value = self.with_value(|a| Matrix::new(a.rows(), 1, a.row_sums()));
        self.unary(value, Op::RowSum(self.idx))
    }

    /// Column vector of row means.
    pub fn row_mean(self) -> Var<'t> {
        let value = self.with_value(|a| {
            let inv = 1.0 / a.cols() as f64;
            Matrix::new(a.rows(), 1, a.row_sums().iter().map(|s| s * inv).collect())
        });
        self.unary(value, Op::RowMean(self.idx))
    }

    pub fn sum_all(self) -> Var<'t> {
        let value = self.with_value(|a| Matrix::scalar(a.sum()));
        self.unary(value, Op::SumAll(self.idx))
    }

    pub fn mean_all(self) -> Var<'t> {
        let value = self.with_value(|a| Matrix::scalar(a.sum() / (a.rows() * a.cols()) as f64));
        self.unary(value, Op::MeanAll(self.idx))
    }

    pub fn trace(self) -> Var<'t> {
        let value = self.with_value(|a| Matrix::scalar(a.trace()));
        self.unary(value, Op::Trace(self.idx))
    }

    /// Column vector of squared L2 row norms.
    pub fn row_sq_norms(self) -> Var<'t> {
        let value = self.with_value(|a| Matrix::new(a.rows(), 1, a.row_sq_norms()));
        self.unary(value, Op::RowSqNorms(self.idx))
    }

    /// Each row divided by its L2 norm (clamped below at [`GUARD_EPS`]).
    pub fn row_l2_normalize(self) -> Var<'t> {
        let value = self.with_value(|a| {
            Matrix::from_fn(a.rows(), a.cols(), |i, j| {
                let norm = a
                    .row(i)
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
                    .max(GUARD_EPS);
                a[(i, j)] / norm
            })
        });
        self.unary(value, Op::RowL2Normalize(self.idx))
    }

    pub fn row_softmax(self) -> Var<'t> {
        let value = self.with_value(|a| {
            Matrix::from_fn(a.rows(), a.cols(), |i, j| {
                let row = a.row(i);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
                (a[(i, j)] - max).exp() / denom
            })
        });
        self.unary(value, Op::RowSoftmax(self.idx))
    }

    /// Each row divided by its sum (clamped below at [`GUARD_EPS`]).
    /// For strictly positive input every output row sums to exactly one.
    pub fn row_normalize_sum(self) -> Var<'t> {
        let value = self.with_value(|a| {
            Matrix::from_fn(a.rows(), a.cols(), |i, j| {
                let s = a.row(i).iter().sum::<f64>().max(GUARD_EPS);
                a[(i, j)] / s
            })
        });
        self.unary(value, Op::RowNormalizeSum(self.idx))
    }

    /// Add a 1xC row vector to every row of an NxC matrix.
    pub fn add_row_broadcast(self, v: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| {
            v.with_value(|b| {
                assert_eq!(
                    (1, a.cols()),
                    b.shape(),
                    "add_row_broadcast shape mismatch: {:?} + {:?}",
                    a.shape(),
                    b.shape()
                );
                Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] + b[(0, j)])
            })
        });
        self.binary(v, value, Op::AddRowBroadcast(self.idx, v.idx))
    }

    /// Add an Nx1 column vector to every column of an NxC matrix.
    pub fn add_col_broadcast(self, v: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| {
            v.with_value(|b| {
                assert_eq!(
                    (a.rows(), 1),
                    b.shape(),
                    "add_col_broadcast shape mismatch: {:?} + {:?}",
                    a.shape(),
                    b.shape()
                );
                Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] + b[(i, 0)])
            })
        });
        self.binary(v, value, Op::AddColBroadcast(self.idx, v.idx))
    }
}

impl<'t> std::ops::Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| rhs.with_value(|b| a.add(b)));
        self.binary(rhs, value, Op::Add(self.idx, rhs.idx))
    }
}

impl<'t> std::ops::Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.with_value(|a| rhs.with_value(|b| a.sub(b)));
        self.binary(rhs, value, Op::Sub(self.idx, rhs.idx))
    }
}

impl<'t> std::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        let value = self.with_value(|a| a.scale(-1.0));
        self.unary(value, Op::Neg(self.idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows)
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let tape = Tape::new();
        let x = tape.var(mat(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.0, -1.0]]));
        let loss = x.sum_all();
        tape.backward(loss).unwrap();
        assert_eq!(x.grad().unwrap(), Matrix::ones(2, 3));
    }

    #[test]
    fn grad_of_sum_exp_at_zero_is_one() {
        let tape = Tape::new();
        let x = tape.var(Matrix::zeros(1, 1));
        let loss = x.exp().sum_all();
        tape.backward(loss).unwrap();
        assert!((x.grad().unwrap().item() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matmul_grad_of_sum_is_counterpart_transpose() {
        // d/da sum(a*b) = ones * b^T, broadcast over rows of a.
        let tape = Tape::new();
        let a = tape.var(mat(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
        let b = tape.var(mat(&[vec![5.0], vec![7.0]]));
        let loss = a.matmul(b).sum_all();
        tape.backward(loss).unwrap();
        assert_eq!(a.grad().unwrap(), mat(&[vec![5.0, 7.0], vec![5.0, 7.0]]));
        assert_eq!(b.grad().unwrap(), mat(&[vec![4.0], vec![6.0]]));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let tape = Tape::new();
        let x = tape.var(Matrix::ones(2, 2));
        let y = x.scale(2.0);
        match tape.backward(y) {
            Err(TensorError::NonScalarLoss { rows: 2, cols: 2 }) => {}
            other => panic!("expected NonScalarLoss, got {other:?}"),
        }
    }

    #[test]
    fn nan_in_backward_names_the_primitive() {
        let tape = Tape::new();
        let x = tape.var(Matrix::filled(1, 1, -1.0));
        // log(-1 + eps) is NaN; exp's backward multiplies by that NaN value,
        // so the traversal sees a non-finite gradient at the log node.
        let loss = x.log().exp().sum_all();
        match tape.backward(loss) {
            Err(TensorError::NonFinite { op: "log" }) => {}
            other => panic!("expected NonFinite at log, got {other:?}"),
        }
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        let base = mat(&[vec![0.3, -0.7], vec![1.2, 0.4]]);
        let c = 2.5;

        let run = |combine: &dyn Fn(Var<'_>) -> Var<'_>| -> Matrix {
            let tape = Tape::new();
            let x = tape.var(base.clone());
            let loss = combine(x);
            tape.backward(loss).unwrap();
            x.grad().unwrap()
        };
        let g1 = run(&|x| x.exp().sum_all());
        let g2 = run(&|x| x.row_sq_norms().sum_all());
        let g12 = run(&|x| x.exp().sum_all().add(x.row_sq_norms().sum_all().scale(c)));

        for i in 0..2 {
            for j in 0..2 {
                let expect = g1[(i, j)] + c * g2[(i, j)];
                assert!((g12[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_normalize_sum_rows_sum_to_one() {
        let tape = Tape::new();
        let x = tape.constant(mat(&[vec![0.2, 0.3, 0.5], vec![4.0, 1.0, 3.0]]));
        let y = x.row_normalize_sum().value();
        for i in 0..2 {
            let s: f64 = y.row(i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn constants_receive_no_gradient() {
        let tape = Tape::new();
        let x = tape.var(Matrix::ones(2, 2));
        let c = tape.constant(Matrix::ones(2, 2));
        let loss = x.hadamard(c).sum_all();
        tape.backward(loss).unwrap();
        assert!(x.grad().is_some());
        assert!(c.grad().is_none());
    }
}
