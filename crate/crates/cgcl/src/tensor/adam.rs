//! Adaptive-moment gradient optimizer.

use crate::matrix::Matrix;

/// Adam state: one pair of moment accumulators per parameter, plus a shared
/// step counter. Updates use the standard bias correction and are fully
/// deterministic.
#[derive(Clone, Debug)]
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    /// Defaults beta1=0.9, beta2=0.999, eps=1e-8.
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        Self::with_betas(lr, 0.9, 0.999, 1e-8, shapes)
    }

    pub fn with_betas(
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        shapes: &[(usize, usize)],
    ) -> Self {
        assert!(lr > 0.0, "learning rate must be positive, got {lr}");
        AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update over all parameters in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) {
        assert_eq!(
            params.len(),
            self.m.len(),
            "adam: got {} parameters, state tracks {}",
            params.len(),
            self.m.len()
        );
        assert_eq!(
            params.len(),
            grads.len(),
            "adam: parameter/gradient count mismatch"
        );
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);

        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(
                param.shape(),
                grad.shape(),
                "adam shape mismatch: param {:?} vs grad {:?}",
                param.shape(),
                grad.shape()
            );
            assert_eq!(
                m.shape(),
                param.shape(),
                "adam state shape mismatch: moment {:?} vs param {:?}",
                m.shape(),
                param.shape()
            );
            let data = param.data_mut();
            let gd = grad.data();
            let md = m.data_mut();
            let vd = v.data_mut();
            for i in 0..data.len() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gd[i];
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gd[i] * gd[i];
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                data[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
