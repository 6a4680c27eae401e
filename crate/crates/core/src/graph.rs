//! Symmetric sparse adjacency matrices, self-loops, degrees and the
//! symmetric normalization `D^{-1/2} A D^{-1/2}`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Symmetric sparse matrix over `n_nodes` nodes.
///
/// Entries are kept sorted by `(row, col)` with a row-offset index, so each
/// row is a contiguous slice of `(col, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    n_nodes: usize,
    row_offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl SparseAdjacency {
    /// Unweighted symmetric adjacency from undirected pairs. Duplicates and
    /// both orientations collapse to a single entry of value 1.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut triplets = BTreeMap::new();
        for &(i, j) in edges {
            for idx in [i, j] {
                if idx >= n_nodes {
                    return Err(Error::IndexOutOfRange {
                        what: "edge endpoint",
                        index: idx,
                        bound: n_nodes,
                    });
                }
            }
            triplets.insert((i, j), 1.0);
            triplets.insert((j, i), 1.0);
        }
        Ok(Self::from_sorted(n_nodes, triplets))
    }

    /// Builds from explicit triplets, checking every invariant: indices in
    /// range, no duplicates, strictly positive values and symmetry.
    pub fn from_triplets(n_nodes: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(i, j, v) in triplets {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::IndexOutOfRange {
                    what: "triplet index",
                    index: i.max(j),
                    bound: n_nodes,
                });
            }
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidAdjacency(format!(
                    "entry ({i}, {j}) has non-positive value {v}"
                )));
            }
            if map.insert((i, j), v).is_some() {
                return Err(Error::InvalidAdjacency(format!(
                    "duplicate entry ({i}, {j})"
                )));
            }
        }
        for (&(i, j), &v) in &map {
            if map.get(&(j, i)) != Some(&v) {
                return Err(Error::InvalidAdjacency(format!(
                    "entry ({i}, {j}) has no symmetric partner"
                )));
            }
        }
        Ok(Self::from_sorted(n_nodes, map))
    }

    fn from_sorted(n_nodes: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_offsets = vec![0; n_nodes + 1];
        let mut entries = Vec::with_capacity(map.len());
        for ((i, j), v) in map {
            row_offsets[i + 1] += 1;
            entries.push((j, v));
        }
        for i in 0..n_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            n_nodes,
            row_offsets,
            entries,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `(col, value)` pairs of one row, ascending by column.
    #[inline]
    pub fn row_entries(&self, row: usize) -> &[(usize, f64)] {
        &self.entries[self.row_offsets[row]..self.row_offsets[row + 1]]
    }

    /// All entries as `(row, col, value)` in `(row, col)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes)
            .flat_map(move |r| self.row_entries(r).iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let entries = self.row_entries(row);
        entries
            .binary_search_by_key(&col, |&(c, _)| c)
            .ok()
            .map(|k| entries[k].1)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_some()
    }

    /// Sets every diagonal entry to exactly 1, leaving off-diagonal entries
    /// untouched. Idempotent.
    pub fn add_self_loops(&self) -> Self {
        let mut map: BTreeMap<(usize, usize), f64> =
            self.iter().map(|(r, c, v)| ((r, c), v)).collect();
        for i in 0..self.n_nodes {
            map.insert((i, i), 1.0);
        }
        Self::from_sorted(self.n_nodes, map)
    }

    pub fn degree_vector(&self) -> Result<DegreeVector> {
        let degrees: Vec<f64> = (0..self.n_nodes)
            .map(|r| self.row_entries(r).iter().map(|&(_, v)| v).sum())
            .collect();
        if let Some(i) = degrees.iter().position(|&d| d.is_nan() || d <= 0.0) {
            return Err(Error::ZeroDegree(i));
        }
        Ok(DegreeVector(degrees))
    }

    /// `Ã_ij = A_ij / sqrt(d_i d_j)` on the same sparsity pattern.
    pub fn normalize_sym(&self) -> Result<Self> {
        let degrees = self.degree_vector()?;
        let inv_sqrt: Vec<f64> = degrees.0.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut out = self.clone();
        for r in 0..self.n_nodes {
            let lo = self.row_offsets[r];
            let hi = self.row_offsets[r + 1];
            for (c, v) in &mut out.entries[lo..hi] {
                *v *= inv_sqrt[r] * inv_sqrt[*c];
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_nodes, self.n_nodes);
        for (r, c, v) in self.iter() {
            m.set(r, c, v);
        }
        m
    }
}

/// Row sums of an adjacency matrix (the diagonal of the degree matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
