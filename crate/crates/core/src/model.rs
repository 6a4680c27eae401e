//! Two-layer GCN encoder with GAE and VGAE heads, and the inner-product
//! decoder.
//!
//! Both variants compute `H = ReLU(Ã X W0)` and `μ = Ã H W1μ`. The
//! variational head adds `log σ = Ã H W1σ` sharing `W0`, and samples
//! `z = μ + exp(log σ) ⊙ ε`. The decoder scores a pair by `zᵢᵀzⱼ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::numerics::{
    dot, glorot_uniform, relu, sample_standard_normal, spmm, DenseMatrix, SeededRng,
};

/// Row block size used when streaming `Z Zᵀ`.
pub const DEFAULT_BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gae,
    Vgae,
}

/// Encoder input: explicit features, or the identity for featureless runs.
///
/// `Identity(n)` behaves exactly like `Dense(I_n)` but skips the product.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeFeatures {
    Dense(DenseMatrix),
    Identity(usize),
}

impl From<DenseMatrix> for NodeFeatures {
    fn from(m: DenseMatrix) -> Self {
        NodeFeatures::Dense(m)
    }
}

impl NodeFeatures {
    pub fn n_nodes(&self) -> usize {
        match self {
            NodeFeatures::Dense(m) => m.rows(),
            NodeFeatures::Identity(n) => *n,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            NodeFeatures::Dense(m) => m.cols(),
            NodeFeatures::Identity(n) => *n,
        }
    }

    /// `X · W`.
    pub fn times(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            NodeFeatures::Dense(x) => x.matmul(w),
            NodeFeatures::Identity(n) => {
                if w.rows() != *n {
                    return Err(Error::ShapeMismatch {
                        op: "identity features x weights",
                        left: (*n, *n),
                        right: w.shape(),
                    });
                }
                Ok(w.clone())
            }
        }
    }

    /// `Xᵀ · G`.
    pub fn transpose_times(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            NodeFeatures::Dense(x) => x.matmul_tn(g),
            NodeFeatures::Identity(n) => {
                if g.rows() != *n {
                    return Err(Error::ShapeMismatch {
                        op: "identity features transpose x grad",
                        left: (*n, *n),
                        right: g.shape(),
                    });
                }
                Ok(g.clone())
            }
        }
    }
}

/// `n × n` identity used in place of node features.
pub fn identity_features(n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "identity features need n >= 1".into(),
        ));
    }
    Ok(DenseMatrix::identity(n))
}

/// Trainable weights. `w1_sigma` is present exactly for [`Variant::Vgae`].
///
/// The same struct carries gradients, which share the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub variant: Variant,
    pub w0: DenseMatrix,
    pub w1_mu: DenseMatrix,
    pub w1_sigma: Option<DenseMatrix>,
}

impl EncoderParams {
    pub fn new(
        variant: Variant,
        w0: DenseMatrix,
        w1_mu: DenseMatrix,
        w1_sigma: Option<DenseMatrix>,
    ) -> Result<Self> {
        if w0.cols() != w1_mu.rows() {
            return Err(Error::ShapeMismatch {
                op: "EncoderParams w0/w1_mu",
                left: w0.shape(),
                right: w1_mu.shape(),
            });
        }
        match (variant, &w1_sigma) {
            (Variant::Gae, None) => {}
            (Variant::Vgae, Some(s)) if s.shape() == w1_mu.shape() => {}
            (Variant::Vgae, Some(s)) => {
                return Err(Error::ShapeMismatch {
                    op: "EncoderParams w1_sigma",
                    left: w1_mu.shape(),
                    right: s.shape(),
                })
            }
            (Variant::Gae, Some(_)) => {
                return Err(Error::InvalidArgument("GAE has no w1_sigma".into()))
            }
            (Variant::Vgae, None) => {
                return Err(Error::InvalidArgument("VGAE requires w1_sigma".into()))
            }
        }
        Ok(Self {
            variant,
            w0,
            w1_mu,
            w1_sigma,
        })
    }

    /// Glorot-uniform initialization, drawn in the order W0, W1μ, W1σ.
    pub fn glorot(
        variant: Variant,
        input_dim: usize,
        hidden_dim: usize,
        latent_dim: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let w0 = glorot_uniform(rng, input_dim, hidden_dim)?;
        let w1_mu = glorot_uniform(rng, hidden_dim, latent_dim)?;
        let w1_sigma = match variant {
            Variant::Gae => None,
            Variant::Vgae => Some(glorot_uniform(rng, hidden_dim, latent_dim)?),
        };
        Self::new(variant, w0, w1_mu, w1_sigma)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            variant: self.variant,
            w0: DenseMatrix::zeros(self.w0.rows(), self.w0.cols()),
            w1_mu: DenseMatrix::zeros(self.w1_mu.rows(), self.w1_mu.cols()),
            w1_sigma: self
                .w1_sigma
                .as_ref()
                .map(|s| DenseMatrix::zeros(s.rows(), s.cols())),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0.cols()
    }

    pub fn latent_dim(&self) -> usize {
        self.w1_mu.cols()
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &DenseMatrix)> {
        let mut out = vec![("w0", &self.w0), ("w1_mu", &self.w1_mu)];
        if let Some(s) = &self.w1_sigma {
            out.push(("w1_sigma", s));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out = vec![&mut self.w0, &mut self.w1_mu];
        if let Some(s) = &mut self.w1_sigma {
            out.push(s);
        }
        out
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.as_slice().len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.as_slice().iter().copied())
            .collect()
    }

    /// Overwrites all values from a vector laid out like [`Self::flatten`].
    pub fn assign_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_values() {
            return Err(Error::ShapeMismatch {
                op: "assign_flat",
                left: (self.num_values(), 1),
                right: (values.len(), 1),
            });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.as_slice().len();
            t.as_mut_slice()
                .copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

/// Forward-pass cache consumed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    /// `Ã X W0`.
    pub hidden_pre: DenseMatrix,
    /// `ReLU(hidden_pre)`.
    pub hidden: DenseMatrix,
    /// `Ã · hidden`, shared by both heads.
    pub agg_hidden: DenseMatrix,
    pub mu: DenseMatrix,
    pub log_sigma: Option<DenseMatrix>,
    pub eps: Option<DenseMatrix>,
    pub z: DenseMatrix,
}

fn check_inputs(params: &EncoderParams, a_norm: &SparseAdjacency, x: &NodeFeatures) -> Result<()> {
    if x.n_nodes() != a_norm.n_nodes() {
        return Err(Error::ShapeMismatch {
            op: "encode: features vs adjacency",
            left: (x.n_nodes(), x.input_dim()),
            right: (a_norm.n_nodes(), a_norm.n_nodes()),
        });
    }
    if x.input_dim() != params.input_dim() {
        return Err(Error::ShapeMismatch {
            op: "encode: features vs w0",
            left: (x.n_nodes(), x.input_dim()),
            right: params.w0.shape(),
        });
    }
    Ok(())
}

/// Deterministic part of the encoder: hidden layer and both heads.
fn encode_heads(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    x: &NodeFeatures,
) -> Result<(
    DenseMatrix,
    DenseMatrix,
    DenseMatrix,
    DenseMatrix,
    Option<DenseMatrix>,
)> {
    check_inputs(params, a_norm, x)?;
    let hidden_pre = spmm(a_norm, &x.times(&params.w0)?)?;
    let hidden = relu(&hidden_pre);
    let agg_hidden = spmm(a_norm, &hidden)?;
    let mu = agg_hidden.matmul(&params.w1_mu)?;
    let log_sigma = params
        .w1_sigma
        .as_ref()
        .map(|w| agg_hidden.matmul(w))
        .transpose()?;
    Ok((hidden_pre, hidden, agg_hidden, mu, log_sigma))
}

/// Full forward pass. VGAE draws a fresh `ε ~ N(0, I)` from `rng`.
pub fn encode(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    x: &NodeFeatures,
    rng: Option<&mut SeededRng>,
) -> Result<LatentState> {
    let eps = match (params.variant, rng) {
        (Variant::Gae, _) => None,
        (Variant::Vgae, Some(rng)) => Some(sample_standard_normal(
            rng,
            a_norm.n_nodes(),
            params.latent_dim(),
        )),
        (Variant::Vgae, None) => {
            return Err(Error::InvalidArgument(
                "VGAE encode needs a random generator".into(),
            ))
        }
    };
    encode_with_noise(params, a_norm, x, eps)
}

/// Forward pass with caller-supplied noise (required for VGAE, rejected
/// for GAE).
pub fn encode_with_noise(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    x: &NodeFeatures,
    eps: Option<DenseMatrix>,
) -> Result<LatentState> {
    let (hidden_pre, hidden, agg_hidden, mu, log_sigma) = encode_heads(params, a_norm, x)?;
    let z = match (&log_sigma, &eps) {
        (None, None) => mu.clone(),
        (Some(ls), Some(e)) => {
            let spread = ls.map(f64::exp).hadamard(e)?;
            mu.add(&spread)?
        }
        (None, Some(_)) => return Err(Error::InvalidArgument("GAE takes no noise".into())),
        (Some(_), None) => return Err(Error::InvalidArgument("VGAE needs noise".into())),
    };
    Ok(LatentState {
        hidden_pre,
        hidden,
        agg_hidden,
        mu,
        log_sigma,
        eps,
        z,
    })
}

/// Noise-free embedding `μ` (equal to `z` for GAE), used for scoring.
pub fn embed_mean(
    params: &EncoderParams,
    a_norm: &SparseAdjacency,
    x: &NodeFeatures,
) -> Result<DenseMatrix> {
    Ok(encode_heads(params, a_norm, x)?.3)
}

/// `zᵢᵀzⱼ`; apply a sigmoid for the edge probability.
pub fn decode_pair_logit(z: &DenseMatrix, i: usize, j: usize) -> Result<f64> {
    for idx in [i, j] {
        if idx >= z.rows() {
            return Err(Error::IndexOutOfRange {
                what: "decoder node",
                index: idx,
                bound: z.rows(),
            });
        }
    }
    Ok(dot(z.row(i), z.row(j)))
}

/// Logits `Z[start..end] · Zᵀ` for one row block.
pub(crate) fn logit_block(
    z: &DenseMatrix,
    zt: &DenseMatrix,
    start: usize,
    end: usize,
) -> DenseMatrix {
    let n = z.rows();
    let mut block = DenseMatrix::zeros(end - start, n);
    for (bi, i) in (start..end).enumerate() {
        let out = block.row_mut(bi);
        // Row-wise accumulation against Zᵀ; same summation order as `dot`.
        for (k, &zik) in z.row(i).iter().enumerate() {
            for (o, &zjk) in out.iter_mut().zip(zt.row(k)) {
                *o += zik * zjk;
            }
        }
    }
    block
}

/// Streams `Z Zᵀ` in row blocks of at most `block_rows` rows, in row order.
/// The visitor receives the first row index and the `rows × N` logit block.
pub fn decode_full_blocked<F>(z: &DenseMatrix, block_rows: usize, mut visitor: F) -> Result<()>
where
    F: FnMut(usize, &DenseMatrix),
{
    if block_rows == 0 {
        return Err(Error::InvalidArgument("block_rows must be >= 1".into()));
    }
    let n = z.rows();
    let zt = z.transpose();
    let mut start = 0;
    while start < n {
        let end = (start + block_rows).min(n);
        visitor(start, &logit_block(z, &zt, start, end));
        start = end;
    }
    Ok(())
}
