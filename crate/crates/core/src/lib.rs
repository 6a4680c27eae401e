//! Graph auto-encoders for link prediction.
//!
//! A two-layer graph convolutional encoder maps node features and a
//! normalized adjacency matrix to latent vectors; an inner-product decoder
//! scores node pairs. [`model::Variant::Gae`] learns point embeddings,
//! [`model::Variant::Vgae`] a diagonal Gaussian per node trained with the
//! reparameterized evidence lower bound. Gradients are derived by hand and
//! checked against finite differences in the test suite.
//!
//! ```no_run
//! use std::path::Path;
//! use vgae::dataset::{build_train_adjacency, load_content_cites, split_edges, Partition, SplitProfile};
//! use vgae::model::{embed_mean, Variant};
//! use vgae::training::{train, TrainConfig};
//!
//! let data = load_content_cites(Path::new("cora.content"), Path::new("cora.cites"))?;
//! let split = split_edges(&data, 0.05, 0.10, 0, SplitProfile::Benchmark)?;
//! let a_train = build_train_adjacency(&data, &split)?;
//! let out = train(&TrainConfig::new(Variant::Vgae), &a_train, Some(&data.features))?;
//! let z = embed_mean(&out.params, &out.a_norm, &out.features)?;
//! let m = vgae::eval::evaluate(&z, &split, Partition::Test)?;
//! println!("AUC {:.3} AP {:.3}", m.auc, m.ap);
//! # Ok::<(), vgae::Error>(())
//! ```

pub mod dataset;
mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
