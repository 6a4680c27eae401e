use crate::error::{Error, Result};
use crate::model::EncoderParams;
use crate::numerics::DenseMatrix;

/// Adam with bias-corrected moments, one `(m, v)` pair per weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<DenseMatrix>,
    pub v: Vec<DenseMatrix>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    pub fn new(params: &EncoderParams, lr: f64) -> Self {
        let zeros: Vec<DenseMatrix> = params
            .tensors()
            .iter()
            .map(|(_, t)| DenseMatrix::zeros(t.rows(), t.cols()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }

    /// One update of every parameter in place.
    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderParams) -> Result<()> {
        let grads = grads.tensors();
        let mut targets = params.tensors_mut();
        if grads.len() != targets.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "adam: {} parameters, {} gradients, {} moment slots",
                targets.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, (_, g)), m) in targets.iter().zip(&grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
        }

        self.t += 1;
        let t = self.t as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (k, param) in targets.iter_mut().enumerate() {
            let g = grads[k].1.as_slice();
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (((theta, &gi), mi), vi) in param.as_mut_slice().iter_mut().zip(g).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bias1;
                let v_hat = *vi / bias2;
                *theta -= self.lr * m_hat / (v_hat.sqrt() + self.eps_hat);
            }
        }
        Ok(())
    }
}
