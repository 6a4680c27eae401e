//! Exact reverse-mode gradients of `recon + kl` through the decoder, the
//! reparameterization and both GCN layers.

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::model::{EncoderParams, LatentState, NodeFeatures, Variant};
use crate::numerics::{spmm_transpose, DenseMatrix};

use super::loss::{recon_loss_and_grad, LossBreakdown, Reweighting};

fn ensure_finite(name: &'static str, m: &DenseMatrix) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite(format!("gradient of {name}")));
    }
    Ok(())
}

/// Loss and parameter gradients for one forward cache.
///
/// `a_norm` is the propagation matrix used by the encoder, `a_label` the
/// unit adjacency the decoder reconstructs. The KL term is included only
/// for VGAE.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_gradients(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    a_label: &SparseAdjacency,
    x: &NodeFeatures,
    state: &LatentState,
    weights: Reweighting,
    kl_scale: f64,
    block_rows: usize,
) -> Result<(LossBreakdown, EncoderParams)> {
    let (recon, d_z) = recon_loss_and_grad(&state.z, a_label, weights, block_rows)?;

    let (kl, d_mu, d_log_sigma) = match params.variant {
        Variant::Gae => (0.0, d_z, None),
        Variant::Vgae => {
            let (Some(ls), Some(eps)) = (&state.log_sigma, &state.eps) else {
                return Err(Error::InvalidArgument(
                    "VGAE forward cache lacks log_sigma or eps".into(),
                ));
            };
            let kl = super::loss::kl_loss(&state.mu, ls, kl_scale)?;
            // z = μ + e^{log σ} ε ; KL' wrt μ is s·μ, wrt log σ is s(e^{2 log σ} − 1).
            let d_mu = d_z.zip_map(&state.mu, |g, m| g + kl_scale * m)?;
            let sigma_eps = ls.map(f64::exp).hadamard(eps)?;
            let d_ls = d_z
                .hadamard(&sigma_eps)?
                .zip_map(ls, |g, l| g + kl_scale * ((2.0 * l).exp() - 1.0))?;
            (kl, d_mu, Some(d_ls))
        }
    };

    let d_w1_mu = state.agg_hidden.matmul_tn(&d_mu)?;
    let mut d_agg = d_mu.matmul_nt(&params.w1_mu)?;
    let d_w1_sigma = match (&d_log_sigma, &params.w1_sigma) {
        (Some(d_ls), Some(w1s)) => {
            d_agg.add_assign(&d_ls.matmul_nt(w1s)?)?;
            Some(state.agg_hidden.matmul_tn(d_ls)?)
        }
        _ => None,
    };

    let d_hidden = spmm_transpose(a_norm, &d_agg)?;
    let d_pre = d_hidden.zip_map(&state.hidden_pre, |g, h| if h > 0.0 { g } else { 0.0 })?;
    let d_xw0 = spmm_transpose(a_norm, &d_pre)?;
    let d_w0 = x.transpose_times(&d_xw0)?;

    ensure_finite("w0", &d_w0)?;
    ensure_finite("w1_mu", &d_w1_mu)?;
    if let Some(g) = &d_w1_sigma {
        ensure_finite("w1_sigma", g)?;
    }

    let breakdown = LossBreakdown {
        recon,
        kl,
        total: recon + kl,
        pos_weight: weights.pos_weight,
        norm: weights.norm,
    };
    let grads = EncoderParams {
        variant: params.variant,
        w0: d_w0,
        w1_mu: d_w1_mu,
        w1_sigma: d_w1_sigma,
    };
    Ok((breakdown, grads))
}

/// Gradients only; see [`loss_and_gradients`].
#[allow(clippy::too_many_arguments)]
pub fn backward(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    a_label: &SparseAdjacency,
    x: &NodeFeatures,
    state: &LatentState,
    weights: Reweighting,
    kl_scale: f64,
    block_rows: usize,
) -> Result<EncoderParams> {
    loss_and_gradients(
        params, a_norm, a_label, x, state, weights, kl_scale, block_rows,
    )
    .map(|(_, g)| g)
}
