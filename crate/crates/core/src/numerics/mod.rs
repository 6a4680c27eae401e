//! Dense kernels, sparse–dense products, nonlinearities, seeded sampling and
//! a finite-difference gradient oracle.

mod dense;
mod rng;

pub use dense::{dot, DenseMatrix};
pub use rng::{sample_standard_normal, SeededRng};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;

/// `A · B` for sparse `A`.
pub fn spmm(a: &SparseAdjacency, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_nodes() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "spmm",
            left: (a.n_nodes(), a.n_nodes()),
            right: b.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(a.n_nodes(), b.cols());
    for row in 0..a.n_nodes() {
        let o = out.row_mut(row);
        for &(col, v) in a.row_entries(row) {
            for (x, &y) in o.iter_mut().zip(b.row(col)) {
                *x += v * y;
            }
        }
    }
    Ok(out)
}

/// `Aᵀ · B` for sparse `A`, scattering along rows instead of gathering.
pub fn spmm_transpose(a: &SparseAdjacency, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_nodes() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "spmm_transpose",
            left: (a.n_nodes(), a.n_nodes()),
            right: b.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(a.n_nodes(), b.cols());
    for row in 0..a.n_nodes() {
        let src = b.row(row);
        for &(col, v) in a.row_entries(row) {
            for (x, &y) in out.row_mut(col).iter_mut().zip(src) {
                *x += v * y;
            }
        }
    }
    Ok(out)
}

pub fn relu(m: &DenseMatrix) -> DenseMatrix {
    m.map(|v| v.max(0.0))
}

/// Logistic sigmoid, branching on sign so `exp` never overflows.
#[inline]
pub fn sigmoid_stable(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `fan_in × fan_out` matrix with entries uniform on `[-L, L]`,
/// `L = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> Result<DenseMatrix> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument(format!(
            "glorot_uniform needs positive fans, got ({fan_in}, {fan_out})"
        )));
    }
    let limit = glorot_limit(fan_in, fan_out);
    Ok(DenseMatrix::from_fn(fan_in, fan_out, |_, _| {
        rng.uniform(-limit, limit)
    }))
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Central differences `(f(x + h eᵢ) - f(x - h eᵢ)) / 2h` for every coordinate.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("objective near coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}
