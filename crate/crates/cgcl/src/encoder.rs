//! Two-layer graph-convolution encoder and MLP projector.
//!
//! `encode` computes `Z = Anorm * act(Anorm * X * W1) * W2` over the
//! normalized adjacency; the second layer is linear so representations are
//! unconstrained in sign for cosine similarity. `project` applies a
//! two-layer MLP with the same width. Contrastive objectives consume the
//! projected output; downstream evaluation reads the pre-projection `Z`.

use crate::matrix::Matrix;
use crate::tensor::{Tape, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// ReLU-family activations. The randomized/parametric variants from the
/// reference configurations map to fixed-slope leaky ReLUs (the
/// deterministic inference-time form), keeping every forward pass
/// reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    /// Accepts "relu", "leaky_relu", "rrelu" (slope 11/48, the mean of the
    /// usual 1/8..1/3 draw range) and "prelu" (slope 0.25, the usual init).
    pub fn parse(name: &str) -> Result<Self, String> {
        match name {
            "relu" => Ok(Activation::Relu),
            "leaky_relu" => Ok(Activation::LeakyRelu(0.01)),
            "rrelu" => Ok(Activation::LeakyRelu(11.0 / 48.0)),
            "prelu" => Ok(Activation::LeakyRelu(0.25)),
            other => Err(format!(
                "unknown activation {other:?}; expected relu, leaky_relu, rrelu or prelu"
            )),
        }
    }

    pub fn apply<'t>(&self, x: Var<'t>) -> Var<'t> {
        match *self {
            Activation::Relu => x.relu(),
            Activation::LeakyRelu(slope) => x.leaky_relu(slope),
        }
    }
}

/// Encoder and projector weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcnParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub p1: Matrix,
    pub b1: Matrix,
    pub p2: Matrix,
    pub b2: Matrix,
    pub activation: Activation,
}

/// The encoder parameters as tape leaves for one loss evaluation.
pub struct GcnVars<'t> {
    pub w1: Var<'t>,
    pub w2: Var<'t>,
    pub p1: Var<'t>,
    pub b1: Var<'t>,
    pub p2: Var<'t>,
    pub b2: Var<'t>,
    activation: Activation,
}

impl GcnParams {
    pub fn feature_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn repr_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn leaf_vars<'t>(&self, tape: &'t Tape) -> GcnVars<'t> {
        GcnVars {
            w1: tape.var(self.w1.clone()),
            w2: tape.var(self.w2.clone()),
            p1: tape.var(self.p1.clone()),
            b1: tape.var(self.b1.clone()),
            p2: tape.var(self.p2.clone()),
            b2: tape.var(self.b2.clone()),
            activation: self.activation,
        }
    }
}

/// Glorot-uniform sample: entries in `(-a, a)` with `a = sqrt(6/(fi+fo))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

/// Glorot-initialized encoder/projector weights; biases start at zero.
pub fn init_params(
    feature_dim: usize,
    hidden_dim: usize,
    repr_dim: usize,
    activation: Activation,
    rng: &mut impl Rng,
) -> GcnParams {
    assert!(
        feature_dim > 0 && hidden_dim > 0 && repr_dim > 0,
        "encoder dims must be positive: {feature_dim}, {hidden_dim}, {repr_dim}"
    );
    GcnParams {
        w1: glorot(feature_dim, hidden_dim, rng),
        w2: glorot(hidden_dim, repr_dim, rng),
        p1: glorot(repr_dim, repr_dim, rng),
        b1: Matrix::zeros(1, repr_dim),
        p2: glorot(repr_dim, repr_dim, rng),
        b2: Matrix::zeros(1, repr_dim),
        activation,
    }
}

/// `Z = Anorm * act(Anorm * X * W1) * W2`.
///
/// `x` and `a_norm` are constants of the current step; `Anorm * X` is
/// folded outside the tape.
pub fn encode<'t>(tape: &'t Tape, x: &Matrix, a_norm: &Matrix, vars: &GcnVars<'t>) -> Var<'t> {
    assert_eq!(
        a_norm.cols(),
        x.rows(),
        "encode shape mismatch: adjacency {:?} vs attributes {:?}",
        a_norm.shape(),
        x.shape()
    );
    let ax = tape.constant(a_norm.matmul(x));
    let a = tape.constant(a_norm.clone());
    let h = vars.activation.apply(ax.matmul(vars.w1));
    a.matmul(h.matmul(vars.w2))
}

/// `P = act(Z * P1 + b1) * P2 + b2`.
pub fn project<'t>(z: Var<'t>, vars: &GcnVars<'t>) -> Var<'t> {
    let h = vars
        .activation
        .apply(z.matmul(vars.p1).add_row_broadcast(vars.b1));
    h.matmul(vars.p2).add_row_broadcast(vars.b2)
}

/// Non-training forward pass for evaluation and embedding export.
pub fn encode_plain(x: &Matrix, a_norm: &Matrix, params: &GcnParams) -> Matrix {
    let tape = Tape::new();
    let vars = params.leaf_vars(&tape);
    encode(&tape, x, a_norm, &vars).value()
}
