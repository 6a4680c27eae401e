//! Full-batch training of GAE / VGAE encoders.

mod adam;
mod backward;
mod loss;

pub use adam::AdamState;
pub use backward::{backward, loss_and_gradients};
pub use loss::{
    bce_with_logits, kl_loss, recon_loss, recon_loss_and_grad, reweighting_constants,
    LossBreakdown, Reweighting,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::model::{encode, EncoderParams, LatentState, NodeFeatures, Variant, DEFAULT_BLOCK_ROWS};
use crate::numerics::{DenseMatrix, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub epochs: usize,
    pub lr: f64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub featureless: bool,
    pub seed: u64,
    /// Multiplier on the summed KL term; `None` means `1 / N²`, matching the
    /// per-pair averaging of the reconstruction term.
    pub kl_scale: Option<f64>,
    pub block_rows: usize,
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            epochs: 200,
            lr: 0.01,
            hidden_dim: 32,
            latent_dim: 16,
            featureless: false,
            seed: 0,
            kl_scale: None,
            block_rows: DEFAULT_BLOCK_ROWS,
        }
    }

    pub fn resolved_kl_scale(&self, n_nodes: usize) -> f64 {
        self.kl_scale
            .unwrap_or(1.0 / (n_nodes as f64 * n_nodes as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return bad("hidden and latent dims must be positive".into());
        }
        if self.block_rows == 0 {
            return bad("block_rows must be >= 1".into());
        }
        if let Some(s) = self.kl_scale {
            if !s.is_finite() || s < 0.0 {
                return bad(format!("kl_scale must be non-negative, got {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub history: Vec<LossBreakdown>,
    /// Normalized propagation matrix used by the encoder.
    pub a_norm: SparseAdjacency,
    /// Encoder input actually used (identity for featureless runs).
    pub features: NodeFeatures,
}

/// Trains on `a_train` (unit adjacency with self-loops). `x` is ignored for
/// featureless runs and required otherwise.
pub fn train(
    config: &TrainConfig,
    a_train: &SparseAdjacency,
    x: Option<&DenseMatrix>,
) -> Result<TrainOutcome> {
    train_with_monitor(config, a_train, x, |_, _, _| {})
}

/// As [`train`], calling `monitor(epoch, loss, forward_cache)` after each
/// epoch's forward/backward pass and before the parameter update. The
/// monitor cannot influence training.
pub fn train_with_monitor<M>(
    config: &TrainConfig,
    a_train: &SparseAdjacency,
    x: Option<&DenseMatrix>,
    mut monitor: M,
) -> Result<TrainOutcome>
where
    M: FnMut(usize, &LossBreakdown, &LatentState),
{
    config.validate()?;
    let n = a_train.n_nodes();
    let features = if config.featureless {
        NodeFeatures::Identity(n)
    } else {
        match x {
            Some(m) if m.cols() > 0 => NodeFeatures::Dense(m.clone()),
            _ => {
                return Err(Error::InvalidArgument(
                    "no node features given; use a featureless run".into(),
                ))
            }
        }
    };
    let a_norm = a_train.normalize_sym()?;
    let weights = reweighting_constants(a_train)?;
    let kl_scale = config.resolved_kl_scale(n);

    let mut rng = SeededRng::new(config.seed);
    let mut params = EncoderParams::glorot(
        config.variant,
        features.input_dim(),
        config.hidden_dim,
        config.latent_dim,
        &mut rng,
    )?;
    let mut adam = AdamState::new(&params, config.lr);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let state = encode(&params, &a_norm, &features, Some(&mut rng))?;
        let (loss, grads) = loss_and_gradients(
            &params,
            &a_norm,
            a_train,
            &features,
            &state,
            weights,
            kl_scale,
            config.block_rows,
        )
        .map_err(|e| Error::Diverged {
            epoch: epoch + 1,
            msg: e.to_string(),
        })?;
        if !loss.total.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                msg: format!("loss is {}", loss.total),
            });
        }
        monitor(epoch + 1, &loss, &state);
        adam.step(&mut params, &grads)?;
        history.push(loss);
    }

    Ok(TrainOutcome {
        params,
        history,
        a_norm,
        features,
    })
}
