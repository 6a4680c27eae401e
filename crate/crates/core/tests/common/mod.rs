#![allow(dead_code)]

use vgae::dataset::{canonical, Edge};
use vgae::graph::SparseAdjacency;
use vgae::model::{encode_with_noise, EncoderParams, NodeFeatures, Variant};
use vgae::numerics::{glorot_uniform, sample_standard_normal, DenseMatrix, SeededRng};
use vgae::training::{kl_loss, recon_loss, Reweighting};

/// Erdős–Rényi style edge list, canonical and deduplicated.
pub fn random_edges(rng: &mut SeededRng, n: usize, p: f64) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.next_f64() < p {
                edges.push(canonical(i, j));
            }
        }
    }
    edges
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform(-scale, scale))
}

/// Dense `D^{-1/2} (A with unit diagonal) D^{-1/2}` straight from the
/// definition.
pub fn dense_normalized(n: usize, edges: &[Edge]) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for &(i, j) in edges {
        a.set(i, j, 1.0);
        a.set(j, i, 1.0);
    }
    for i in 0..n {
        a.set(i, i, 1.0);
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    DenseMatrix::from_fn(n, n, |i, j| a.get(i, j) / (deg[i] * deg[j]).sqrt())
}

/// Straight-line dense forward pass: returns (mu, log_sigma).
pub fn dense_forward(
    a_hat: &DenseMatrix,
    x: &DenseMatrix,
    params: &EncoderParams,
) -> (DenseMatrix, Option<DenseMatrix>) {
    let h = a_hat.matmul(x).unwrap().matmul(&params.w0).unwrap();
    let h = DenseMatrix::from_fn(h.rows(), h.cols(), |i, j| h.get(i, j).max(0.0));
    let ah = a_hat.matmul(&h).unwrap();
    let mu = ah.matmul(&params.w1_mu).unwrap();
    let ls = params.w1_sigma.as_ref().map(|w| ah.matmul(w).unwrap());
    (mu, ls)
}

/// Double loop over all N² pairs with the textbook log-likelihood.
pub fn naive_recon(z: &DenseMatrix, a: &SparseAdjacency, w: Reweighting) -> f64 {
    let n = z.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let logit: f64 = (0..z.cols()).map(|k| z.get(i, k) * z.get(j, k)).sum();
            let p = 1.0 / (1.0 + (-logit).exp());
            if a.contains(i, j) {
                total += -w.pos_weight * p.ln();
            } else {
                total += -(1.0 - p).ln();
            }
        }
    }
    w.norm * total / (n * n) as f64
}

pub struct GradInstance {
    pub a_label: SparseAdjacency,
    pub a_norm: SparseAdjacency,
    pub x: NodeFeatures,
    pub params: EncoderParams,
    pub eps: Option<DenseMatrix>,
    pub weights: Reweighting,
    pub kl_scale: f64,
}

impl GradInstance {
    /// Random small instance whose pre-activations stay away from the ReLU
    /// kink, so central differences are valid.
    pub fn random(
        seed: u64,
        variant: Variant,
        n: usize,
        d: usize,
        hidden: usize,
        f: usize,
    ) -> Self {
        let mut rng = SeededRng::new(seed);
        loop {
            let mut edges = random_edges(&mut rng, n, 0.35);
            if edges.is_empty() {
                edges.push((0, 1));
            }
            let a_label = SparseAdjacency::from_edges(n, &edges)
                .unwrap()
                .add_self_loops();
            let a_norm = a_label.normalize_sym().unwrap();
            let x = NodeFeatures::Dense(random_matrix(&mut rng, n, d, 1.0));
            let w0 = glorot_uniform(&mut rng, d, hidden).unwrap();
            let w1_mu = glorot_uniform(&mut rng, hidden, f).unwrap();
            let w1_sigma = match variant {
                Variant::Gae => None,
                Variant::Vgae => Some(glorot_uniform(&mut rng, hidden, f).unwrap()),
            };
            let params = EncoderParams::new(variant, w0, w1_mu, w1_sigma).unwrap();
            let eps = match variant {
                Variant::Gae => None,
                Variant::Vgae => Some(sample_standard_normal(&mut rng, n, f)),
            };
            let state = encode_with_noise(&params, &a_norm, &x, eps.clone()).unwrap();
            if state.hidden_pre.as_slice().iter().any(|v| v.abs() < 1e-2) {
                continue;
            }
            let weights = vgae::training::reweighting_constants(&a_label).unwrap();
            let kl_scale = 1.0 / n as f64;
            return Self {
                a_label,
                a_norm,
                x,
                params,
                eps,
                weights,
                kl_scale,
            };
        }
    }

    pub fn objective(&self, params: &EncoderParams) -> f64 {
        let s = encode_with_noise(params, &self.a_norm, &self.x, self.eps.clone()).unwrap();
        let recon = recon_loss(&s.z, &self.a_label, self.weights).unwrap();
        let kl = match &s.log_sigma {
            Some(ls) => kl_loss(&s.mu, ls, self.kl_scale).unwrap(),
            None => 0.0,
        };
        recon + kl
    }
}

/// Planted-partition graph with class-correlated sparse binary features,
/// a small stand-in for a citation network.
pub fn planted_partition(
    n: usize,
    classes: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    seed: u64,
) -> vgae::dataset::CitationDataset {
    let mut rng = SeededRng::new(seed);
    let class: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if class[i] == class[j] { p_in } else { p_out };
            if rng.next_f64() < p {
                edges.push((i, j));
            }
        }
    }
    let block = feature_dim / classes;
    let features = DenseMatrix::from_fn(n, feature_dim, |i, f| {
        let own = f / block == class[i];
        let p = if own { 0.3 } else { 0.02 };
        if rng.next_f64() < p {
            1.0
        } else {
            0.0
        }
    });
    vgae::dataset::CitationDataset {
        n_nodes: n,
        features,
        edges,
        labels: Some(class.iter().map(|c| c.to_string()).collect()),
        node_ids: (0..n).map(|i| i.to_string()).collect(),
        skipped_cites: 0,
    }
}
