//! Sparse kernels, encoder and losses against straight-line dense oracles.

mod common;

use common::{dense_forward, dense_normalized, naive_recon, random_edges, random_matrix};
use proptest::prelude::*;
use vgae::graph::SparseAdjacency;
use vgae::model::{encode, encode_with_noise, EncoderParams, NodeFeatures, Variant};
use vgae::numerics::{sample_standard_normal, spmm, spmm_transpose, DenseMatrix, SeededRng};
use vgae::training::{kl_loss, recon_loss, reweighting_constants, Reweighting};

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..9).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n), 0..(n * n));
        (Just(n), pairs)
    })
}

proptest! {
    #[test]
    fn normalization_matches_dense_definition((n, raw) in graph_strategy()) {
        let edges: Vec<_> = raw.into_iter().filter(|(i, j)| i != j).collect();
        let a = SparseAdjacency::from_edges(n, &edges).unwrap().add_self_loops();
        let norm = a.normalize_sym().unwrap();
        let canon: Vec<_> = edges.iter().map(|&(i, j)| vgae::dataset::canonical(i, j)).collect();
        let oracle = dense_normalized(n, &canon);
        prop_assert!(norm.to_dense().max_abs_diff(&oracle).unwrap() < 1e-12);
        for (i, j, v) in norm.iter() {
            prop_assert_eq!(norm.get(j, i), Some(v));
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn spmm_matches_densified_product((n, raw) in graph_strategy(), cols in 1usize..5, seed in any::<u64>()) {
        let edges: Vec<_> = raw.into_iter().filter(|(i, j)| i != j).collect();
        let a = SparseAdjacency::from_edges(n, &edges).unwrap().add_self_loops().normalize_sym().unwrap();
        let b = random_matrix(&mut SeededRng::new(seed), n, cols, 2.0);
        let dense = a.to_dense();
        prop_assert!(spmm(&a, &b).unwrap().max_abs_diff(&dense.matmul(&b).unwrap()).unwrap() < 1e-12);
        let t = dense.transpose().matmul(&b).unwrap();
        prop_assert!(spmm_transpose(&a, &b).unwrap().max_abs_diff(&t).unwrap() < 1e-12);
    }

    #[test]
    fn sigmoid_complement(x in -30.0f64..30.0) {
        let s = vgae::numerics::sigmoid_stable(x) + vgae::numerics::sigmoid_stable(-x);
        prop_assert!((s - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn regular_graph_rows_sum_to_one() {
    // 6-cycle: every node has degree 3 with its self-loop.
    let edges: Vec<_> = (0..6)
        .map(|i| vgae::dataset::canonical(i, (i + 1) % 6))
        .collect();
    let a = SparseAdjacency::from_edges(6, &edges)
        .unwrap()
        .add_self_loops()
        .normalize_sym()
        .unwrap();
    for r in 0..6 {
        let s: f64 = a.row_entries(r).iter().map(|&(_, v)| v).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
}

#[test]
fn matmul_associativity() {
    let mut rng = SeededRng::new(77);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 5, 5, 1.0);
        let b = random_matrix(&mut rng, 5, 5, 1.0);
        let c = random_matrix(&mut rng, 5, 5, 1.0);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right).unwrap() < 1e-10);
    }
}

#[test]
fn spmm_on_fifty_random_graphs() {
    let mut rng = SeededRng::new(4242);
    for _ in 0..50 {
        let n = 2 + rng.below(9) as usize;
        let edges = random_edges(&mut rng, n, 0.4);
        let a = SparseAdjacency::from_edges(n, &edges)
            .unwrap()
            .add_self_loops()
            .normalize_sym()
            .unwrap();
        let b = random_matrix(&mut rng, n, 3, 1.0);
        let diff = spmm(&a, &b)
            .unwrap()
            .max_abs_diff(&a.to_dense().matmul(&b).unwrap())
            .unwrap();
        assert!(diff < 1e-12);
    }
}

fn random_encoder(
    rng: &mut SeededRng,
    variant: Variant,
    d: usize,
    h: usize,
    f: usize,
) -> EncoderParams {
    let w1_sigma = match variant {
        Variant::Gae => None,
        Variant::Vgae => Some(random_matrix(rng, h, f, 1.0)),
    };
    EncoderParams::new(
        variant,
        random_matrix(rng, d, h, 1.0),
        random_matrix(rng, h, f, 1.0),
        w1_sigma,
    )
    .unwrap()
}

#[test]
fn encode_matches_dense_forward() {
    let mut rng = SeededRng::new(31);
    for trial in 0..20 {
        let n = 2 + trial % 7;
        let edges = random_edges(&mut rng, n, 0.3);
        let a = SparseAdjacency::from_edges(n, &edges)
            .unwrap()
            .add_self_loops()
            .normalize_sym()
            .unwrap();
        let x = random_matrix(&mut rng, n, 4, 1.0);
        for variant in [Variant::Gae, Variant::Vgae] {
            let p = random_encoder(&mut rng, variant, 4, 5, 3);
            let eps = (variant == Variant::Vgae).then(|| sample_standard_normal(&mut rng, n, 3));
            let s =
                encode_with_noise(&p, &a, &NodeFeatures::Dense(x.clone()), eps.clone()).unwrap();
            let (mu, ls) = dense_forward(&a.to_dense(), &x, &p);
            assert!(s.mu.max_abs_diff(&mu).unwrap() < 1e-10);
            assert_eq!(s.hidden, s.hidden_pre.map(|v| v.max(0.0)));
            match (ls, eps) {
                (Some(ls), Some(eps)) => {
                    assert!(s.log_sigma.as_ref().unwrap().max_abs_diff(&ls).unwrap() < 1e-10);
                    let z = DenseMatrix::from_fn(n, 3, |i, j| {
                        mu.get(i, j) + ls.get(i, j).exp() * eps.get(i, j)
                    });
                    assert!(s.z.max_abs_diff(&z).unwrap() < 1e-10);
                }
                _ => assert_eq!(s.z, s.mu),
            }
        }
    }
}

#[test]
fn identity_features_skip_is_exact() {
    let mut rng = SeededRng::new(8);
    let n = 9;
    let edges = random_edges(&mut rng, n, 0.3);
    let a = SparseAdjacency::from_edges(n, &edges)
        .unwrap()
        .add_self_loops()
        .normalize_sym()
        .unwrap();
    let p = random_encoder(&mut rng, Variant::Vgae, n, 4, 2);
    let dense = encode(
        &p,
        &a,
        &NodeFeatures::Dense(DenseMatrix::identity(n)),
        Some(&mut SeededRng::new(1)),
    )
    .unwrap();
    let fast = encode(
        &p,
        &a,
        &NodeFeatures::Identity(n),
        Some(&mut SeededRng::new(1)),
    )
    .unwrap();
    assert_eq!(dense, fast);
}

#[test]
fn vgae_encode_reproducible_from_rng_state() {
    let mut rng = SeededRng::new(12);
    let n = 6;
    let a = SparseAdjacency::from_edges(n, &random_edges(&mut rng, n, 0.5))
        .unwrap()
        .add_self_loops()
        .normalize_sym()
        .unwrap();
    let p = random_encoder(&mut rng, Variant::Vgae, 3, 4, 2);
    let x = NodeFeatures::Dense(random_matrix(&mut rng, n, 3, 1.0));
    let s1 = encode(&p, &a, &x, Some(&mut SeededRng::new(99))).unwrap();
    let s2 = encode(&p, &a, &x, Some(&mut SeededRng::new(99))).unwrap();
    assert_eq!(s1, s2);
    let g = random_encoder(&mut rng, Variant::Gae, 3, 4, 2);
    assert_eq!(
        encode(&g, &a, &x, None).unwrap(),
        encode(&g, &a, &x, None).unwrap()
    );
}

#[test]
fn decoder_is_symmetric() {
    let z = sample_standard_normal(&mut SeededRng::new(3), 10, 4);
    for i in 0..10 {
        for j in 0..10 {
            assert_eq!(
                vgae::model::decode_pair_logit(&z, i, j).unwrap(),
                vgae::model::decode_pair_logit(&z, j, i).unwrap()
            );
        }
    }
}

#[test]
fn recon_loss_matches_double_loop() {
    let mut rng = SeededRng::new(55);
    for trial in 0..20 {
        let n = 3 + trial % 10;
        let edges = random_edges(&mut rng, n, 0.3);
        let a = SparseAdjacency::from_edges(n, &edges)
            .unwrap()
            .add_self_loops();
        let w = reweighting_constants(&a).unwrap();
        let z = random_matrix(&mut rng, n, 3, 1.5);
        let fast = recon_loss(&z, &a, w).unwrap();
        assert!(
            (fast - naive_recon(&z, &a, w)).abs() < 1e-12,
            "trial {trial}"
        );
    }
}

#[test]
fn unit_weights_give_plain_mean_nll() {
    let mut rng = SeededRng::new(66);
    let n = 8;
    let a = SparseAdjacency::from_edges(n, &random_edges(&mut rng, n, 0.4))
        .unwrap()
        .add_self_loops();
    let z = random_matrix(&mut rng, n, 2, 1.0);
    let unit = Reweighting {
        pos_weight: 1.0,
        norm: 1.0,
    };
    // Mean negative log-likelihood of the Bernoulli product over all pairs.
    let mut nll = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = 1.0 / (1.0 + (-(z.get(i, 0) * z.get(j, 0) + z.get(i, 1) * z.get(j, 1))).exp());
            nll -= if a.contains(i, j) {
                p.ln()
            } else {
                (1.0 - p).ln()
            };
        }
    }
    nll /= (n * n) as f64;
    assert!((recon_loss(&z, &a, unit).unwrap() - nll).abs() < 1e-12);
}

#[test]
fn recon_loss_invariant_under_relabeling() {
    let mut rng = SeededRng::new(9);
    let n = 10;
    let edges = random_edges(&mut rng, n, 0.3);
    let a = SparseAdjacency::from_edges(n, &edges)
        .unwrap()
        .add_self_loops();
    let w = reweighting_constants(&a).unwrap();
    let z = random_matrix(&mut rng, n, 3, 1.0);
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let pz = DenseMatrix::from_fn(n, 3, |i, j| z.get(perm[i], j));
    let inv: Vec<usize> = {
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        inv
    };
    let pedges: Vec<_> = edges
        .iter()
        .map(|&(i, j)| vgae::dataset::canonical(inv[i], inv[j]))
        .collect();
    let pa = SparseAdjacency::from_edges(n, &pedges)
        .unwrap()
        .add_self_loops();
    let pw = reweighting_constants(&pa).unwrap();
    assert_eq!(w, pw);
    let l1 = recon_loss(&z, &a, w).unwrap();
    let l2 = recon_loss(&pz, &pa, pw).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
}

/// Monte Carlo estimate of `E_q[log q(z) − log p(z)]` with its standard error.
fn kl_monte_carlo(
    mu: &DenseMatrix,
    ls: &DenseMatrix,
    samples: usize,
    rng: &mut SeededRng,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let eps = sample_standard_normal(rng, mu.rows(), mu.cols());
        let mut v = 0.0;
        for k in 0..mu.as_slice().len() {
            let (m, l, e) = (mu.as_slice()[k], ls.as_slice()[k], eps.as_slice()[k]);
            let z = m + l.exp() * e;
            // log N(z | m, σ²) − log N(z | 0, 1); the 2π terms cancel.
            v += -l - 0.5 * e * e + 0.5 * z * z;
        }
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn kl_closed_form_matches_monte_carlo() {
    let mut rng = SeededRng::new(2718);
    for _ in 0..5 {
        let mu = random_matrix(&mut rng, 2, 2, 1.5);
        let ls = random_matrix(&mut rng, 2, 2, 0.8);
        let closed = kl_loss(&mu, &ls, 1.0).unwrap();
        let (mc, se) = kl_monte_carlo(&mu, &ls, 100_000, &mut rng);
        assert!(
            (closed - mc).abs() < 3.0 * se,
            "closed {closed} mc {mc} se {se}"
        );
    }
}
