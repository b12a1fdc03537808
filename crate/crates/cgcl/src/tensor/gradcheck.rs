//! Finite-difference gradient verification.
//!
//! `grad_check` compares the tape's analytic gradients against central
//! differences of the same scalar function. It is the independent oracle all
//! differentiable losses are tested against.

use super::{Tape, TensorError, Var};
use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Max relative error per parameter, in input order.
    pub per_param: Vec<f64>,
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Relative error with an absolute-scale floor: differences below 1e-6 in
/// magnitude are compared absolutely so vanishing gradients do not blow up
/// the ratio.
fn relative_error(a: f64, n: f64) -> f64 {
    let denom = a.abs().max(n.abs());
    if denom < 1e-6 {
        (a - n).abs()
    } else {
        (a - n).abs() / denom
    }
}

/// Check the analytic gradient of `f` at `params` against central
/// differences with step `h`.
///
/// `f` rebuilds the scalar loss from leaf vars created in parameter order;
/// it must be deterministic given the parameter values. Any discrete choice
/// inside the loss (hard assignments, argmax positives) must be held fixed
/// by the closure, matching the losses' stop-gradient semantics.
pub fn grad_check<F>(
    f: F,
    params: &[Matrix],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport, TensorError>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>, TensorError>,
{
    assert!(h > 0.0, "finite-difference step must be positive, got {h}");

    let eval = |values: &[Matrix]| -> Result<f64, TensorError> {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = values.iter().map(|m| tape.var(m.clone())).collect();
        let loss = f(&tape, &vars)?;
        let v = loss.item();
        if !v.is_finite() {
            return Err(TensorError::NonFinite {
                op: "grad_check eval",
            });
        }
        Ok(v)
    };

    // Analytic pass.
    let analytic: Vec<Matrix> = {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = params.iter().map(|m| tape.var(m.clone())).collect();
        let loss = f(&tape, &vars)?;
        if !loss.item().is_finite() {
            return Err(TensorError::NonFinite {
                op: "grad_check loss",
            });
        }
        tape.backward(loss)?;
        vars.iter()
            .map(|v| {
                v.grad().unwrap_or_else(|| {
                    let (r, c) = v.shape();
                    Matrix::zeros(r, c)
                })
            })
            .collect()
    };

    let mut work: Vec<Matrix> = params.to_vec();
    let mut per_param = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut worst = 0.0f64;
        for idx in 0..params[p].data().len() {
            let orig = work[p].data()[idx];
            work[p].data_mut()[idx] = orig + h;
            let plus = eval(&work)?;
            work[p].data_mut()[idx] = orig - h;
            let minus = eval(&work)?;
            work[p].data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(analytic[p].data()[idx], numeric));
        }
        per_param.push(worst);
    }

    let max_rel_err = per_param.iter().cloned().fold(0.0, f64::max);
    Ok(GradCheckReport {
        per_param,
        max_rel_err,
        tol,
        pass: max_rel_err <= tol,
    })
}
