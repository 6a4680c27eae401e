//! Re-weighted reconstruction loss and the Gaussian KL term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::model::{decode_full_blocked, logit_block, DEFAULT_BLOCK_ROWS};
use crate::numerics::DenseMatrix;

/// Per-epoch objective. `total = recon + kl` is the minimized quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
    pub pos_weight: f64,
    pub norm: f64,
}

/// Class-balancing constants for the reconstruction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reweighting {
    /// Weight on `A_ij = 1` terms: `#zeros / #ones`.
    pub pos_weight: f64,
    /// Overall scale: `N² / (2 · #zeros)`.
    pub norm: f64,
}

/// Counts the ones of a unit adjacency (self-loops and both orientations
/// included) and derives [`Reweighting`].
pub fn reweighting_constants(a: &SparseAdjacency) -> Result<Reweighting> {
    if let Some((r, c, v)) = a.iter().find(|&(_, _, v)| v != 1.0) {
        return Err(Error::InvalidAdjacency(format!(
            "label adjacency must be unit-valued, entry ({r}, {c}) is {v}"
        )));
    }
    let n = a.n_nodes() as f64;
    let ones = a.nnz() as f64;
    let zeros = n * n - ones;
    if ones == 0.0 {
        return Err(Error::Degenerate("adjacency has no entries".into()));
    }
    if zeros == 0.0 {
        return Err(Error::Degenerate(
            "adjacency is complete, no zero entries".into(),
        ));
    }
    Ok(Reweighting {
        pos_weight: zeros / ones,
        norm: n * n / (2.0 * zeros),
    })
}

/// `BCE(ℓ, 0) = log(1 + e^ℓ)` in overflow-safe form, together with `σ(ℓ)`,
/// sharing one exponential.
#[inline]
pub(crate) fn softplus_and_sigmoid(logit: f64) -> (f64, f64) {
    let e = (-logit.abs()).exp();
    let sp = logit.max(0.0) + e.ln_1p();
    let sig = if logit >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    };
    (sp, sig)
}

/// Binary cross-entropy with logits, `max(ℓ,0) − ℓy + log(1 + e^{−|ℓ|})`.
#[inline]
pub fn bce_with_logits(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

fn check_logits(block: &DenseMatrix, start: usize) -> Result<()> {
    if let Some(k) = block.as_slice().iter().position(|v| !v.is_finite()) {
        let n = block.cols();
        return Err(Error::NonFinite(format!(
            "logit ({}, {})",
            start + k / n,
            k % n
        )));
    }
    Ok(())
}

fn check_label_shape(z: &DenseMatrix, a: &SparseAdjacency) -> Result<()> {
    if z.rows() != a.n_nodes() {
        return Err(Error::ShapeMismatch {
            op: "reconstruction loss",
            left: z.shape(),
            right: (a.n_nodes(), a.n_nodes()),
        });
    }
    Ok(())
}

/// `norm / N² · Σᵢⱼ wᵢⱼ BCE(zᵢᵀzⱼ, Aᵢⱼ)` over all `N²` pairs, diagonal
/// included, where `wᵢⱼ = pos_weight` on edges and 1 elsewhere.
pub fn recon_loss(z: &DenseMatrix, a: &SparseAdjacency, w: Reweighting) -> Result<f64> {
    check_label_shape(z, a)?;
    let n = z.rows();
    let mut total = 0.0;
    let mut failure = None;
    decode_full_blocked(z, DEFAULT_BLOCK_ROWS, |start, block| {
        if failure.is_some() {
            return;
        }
        if let Err(e) = check_logits(block, start) {
            failure = Some(e);
            return;
        }
        for r in 0..block.rows() {
            let logits = block.row(r);
            let mut row_sum: f64 = logits.iter().map(|&l| softplus_and_sigmoid(l).0).sum();
            for &(col, _) in a.row_entries(start + r) {
                let l = logits[col];
                let sp = softplus_and_sigmoid(l).0;
                row_sum += w.pos_weight * (sp - l) - sp;
            }
            total += row_sum;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(w.norm * total / (n as f64 * n as f64))
}

/// Reconstruction loss and its gradient with respect to `Z`, in one
/// blocked pass.
///
/// With `Gᵢⱼ = ∂loss/∂ℓᵢⱼ` the gradient is `(G + Gᵀ) Z`. Logits and labels
/// are both symmetric, so `G` is too and each block contributes `2 G_block Z`
/// to its own rows only.
pub fn recon_loss_and_grad(
    z: &DenseMatrix,
    a: &SparseAdjacency,
    w: Reweighting,
    block_rows: usize,
) -> Result<(f64, DenseMatrix)> {
    check_label_shape(z, a)?;
    if block_rows == 0 {
        return Err(Error::InvalidArgument("block_rows must be >= 1".into()));
    }
    let n = z.rows();
    let f = z.cols();
    let scale = w.norm / (n as f64 * n as f64);
    let mut total = 0.0;
    let mut grad = DenseMatrix::zeros(n, f);
    let zt = z.transpose();
    let mut start = 0;
    while start < n {
        let end = (start + block_rows).min(n);
        let mut block = logit_block(z, &zt, start, end);
        check_logits(&block, start)?;
        for r in 0..block.rows() {
            let row = block.row_mut(r);
            let mut row_sum = 0.0;
            let mut positives = Vec::new();
            for &(col, _) in a.row_entries(start + r) {
                positives.push((col, row[col]));
            }
            for g in row.iter_mut() {
                let (sp, sig) = softplus_and_sigmoid(*g);
                row_sum += sp;
                *g = sig;
            }
            for (col, l) in positives {
                let (sp, sig) = softplus_and_sigmoid(l);
                row_sum += w.pos_weight * (sp - l) - sp;
                row[col] = w.pos_weight * (sig - 1.0);
            }
            total += row_sum;

            let out = grad.row_mut(start + r);
            for (j, &g) in row.iter().enumerate() {
                for (o, &zj) in out.iter_mut().zip(z.row(j)) {
                    *o += g * zj;
                }
            }
            for o in out.iter_mut() {
                *o *= 2.0 * scale;
            }
        }
        start = end;
    }
    Ok((scale * total, grad))
}

/// `kl_scale · ½ Σ (μ² + e^{2 log σ} − 1 − 2 log σ)`: KL from
/// `N(μ, σ²)` to `N(0, 1)` summed over all entries.
pub fn kl_loss(mu: &DenseMatrix, log_sigma: &DenseMatrix, kl_scale: f64) -> Result<f64> {
    if mu.shape() != log_sigma.shape() {
        return Err(Error::ShapeMismatch {
            op: "kl_loss",
            left: mu.shape(),
            right: log_sigma.shape(),
        });
    }
    let sum: f64 = mu
        .as_slice()
        .iter()
        .zip(log_sigma.as_slice())
        .map(|(&m, &ls)| m * m + (2.0 * ls).exp() - 1.0 - 2.0 * ls)
        .sum();
    Ok(kl_scale * 0.5 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_standard_normal, SeededRng};

    fn path3() -> SparseAdjacency {
        SparseAdjacency::from_edges(3, &[(0, 1), (1, 2)])
            .unwrap()
            .add_self_loops()
    }

    #[test]
    fn constants_examples() {
        let eye = SparseAdjacency::from_edges(2, &[])
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&eye).unwrap();
        assert_eq!((w.pos_weight, w.norm), (1.0, 1.0));

        let k2 = SparseAdjacency::from_edges(2, &[(0, 1)])
            .unwrap()
            .add_self_loops();
        assert!(matches!(
            reweighting_constants(&k2),
            Err(Error::Degenerate(_))
        ));

        let w = reweighting_constants(&path3()).unwrap();
        assert!((w.pos_weight - 2.0 / 7.0).abs() < 1e-15);
        assert!((w.norm - 9.0 / 4.0).abs() < 1e-15);

        let empty = SparseAdjacency::from_edges(2, &[]).unwrap();
        assert!(reweighting_constants(&empty).is_err());
    }

    #[test]
    fn zero_logits_give_log2() {
        let eye = SparseAdjacency::from_edges(2, &[])
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&eye).unwrap();
        let z = DenseMatrix::zeros(2, 3);
        let l = recon_loss(&z, &eye, w).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_reconstruction_limit() {
        // Self-loops only: diagonal logits +40, cross logits -40.
        let eye = SparseAdjacency::from_edges(2, &[])
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&eye).unwrap();
        let s = 40f64.sqrt();
        let z = DenseMatrix::from_rows(&[[s, 0.0], [-s, 0.0]]).unwrap();
        assert!(recon_loss(&z, &eye, w).unwrap() < 1e-15);
    }

    #[test]
    fn fused_gradient_pass_agrees_with_loss() {
        let a = SparseAdjacency::from_edges(7, &[(0, 1), (1, 2), (3, 4), (5, 6), (0, 6)])
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&a).unwrap();
        let z = sample_standard_normal(&mut SeededRng::new(4), 7, 3);
        let l = recon_loss(&z, &a, w).unwrap();
        for block in [1, 2, 5, 7, 100] {
            let (l2, _) = recon_loss_and_grad(&z, &a, w, block).unwrap();
            assert!((l - l2).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_logits_error() {
        let eye = SparseAdjacency::from_edges(2, &[])
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&eye).unwrap();
        let z = DenseMatrix::from_rows(&[[f64::NAN], [1.0]]).unwrap();
        assert!(matches!(recon_loss(&z, &eye, w), Err(Error::NonFinite(_))));
        assert!(recon_loss_and_grad(&z, &eye, w, 4).is_err());
    }

    #[test]
    fn kl_examples() {
        let zero = DenseMatrix::zeros(3, 2);
        assert_eq!(kl_loss(&zero, &zero, 1.0).unwrap(), 0.0);
        let one = DenseMatrix::from_rows(&[[1.0]]).unwrap();
        let z1 = DenseMatrix::from_rows(&[[0.0]]).unwrap();
        assert!((kl_loss(&one, &z1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let half = DenseMatrix::from_rows(&[[0.5]]).unwrap();
        let expected = (std::f64::consts::E - 2.0) / 2.0;
        assert!((kl_loss(&z1, &half, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.35914).abs() < 1e-5);
        assert!(kl_loss(&zero, &one, 1.0).is_err());
    }

    #[test]
    fn bce_form_matches_naive() {
        for l in [-3.0f64, -0.5, 0.0, 0.7, 4.0] {
            let p: f64 = 1.0 / (1.0 + (-l).exp());
            assert!((bce_with_logits(l, 1.0) + p.ln()).abs() < 1e-12);
            assert!((bce_with_logits(l, 0.0) + (1.0 - p).ln()).abs() < 1e-12);
        }
        assert!(bce_with_logits(1e3, 0.0).is_finite());
    }
}
