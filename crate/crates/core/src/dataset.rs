//! Citation-network ingestion and the link-prediction edge split.
//!
//! Two text layouts are supported:
//!
//! * content/cites: `node_id<TAB>f1 ... fD<TAB>label` per node and
//!   `cited_id<TAB>citing_id` per citation (the raw Cora/Citeseer layout);
//! * edge list: `i j` integer pairs, with an optional dense feature file that
//!   starts with an `N D` header.
//!
//! Edges are stored once per undirected pair as `(min, max)`, sorted.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::numerics::{DenseMatrix, SeededRng};

pub type Edge = (usize, usize);

#[inline]
pub fn canonical(i: usize, j: usize) -> Edge {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationDataset {
    pub n_nodes: usize,
    /// `n_nodes × feature_dim`; zero columns when no features were supplied.
    pub features: DenseMatrix,
    /// Canonical `(i, j)` pairs with `i < j`, sorted and deduplicated.
    pub edges: Vec<Edge>,
    /// Opaque class labels; ingested but never used for training.
    pub labels: Option<Vec<String>>,
    /// Original node identifiers in index order.
    pub node_ids: Vec<String>,
    /// Citation lines that referenced a node missing from the content file.
    pub skipped_cites: usize,
}

impl CitationDataset {
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn has_features(&self) -> bool {
        self.features.cols() > 0
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_content_cites(content_path: &Path, cites_path: &Path) -> Result<CitationDataset> {
    let content = read_to_string(content_path)?;
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut node_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut feature_dim: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::parse(
                content_path,
                lineno + 1,
                "expected node id and label",
            ));
        }
        let dim = fields.len() - 2;
        match feature_dim {
            None => feature_dim = Some(dim),
            Some(d) if d != dim => {
                return Err(Error::parse(
                    content_path,
                    lineno + 1,
                    format!("expected {d} features, found {dim}"),
                ))
            }
            Some(_) => {}
        }
        let id = fields[0].to_string();
        if index_of.contains_key(&id) {
            return Err(Error::parse(
                content_path,
                lineno + 1,
                format!("duplicate node id {id:?}"),
            ));
        }
        for f in &fields[1..fields.len() - 1] {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::parse(content_path, lineno + 1, format!("bad feature value {f:?}"))
            })?;
            values.push(v);
        }
        index_of.insert(id.clone(), node_ids.len());
        node_ids.push(id);
        labels.push(fields[fields.len() - 1].to_string());
    }

    let n_nodes = node_ids.len();
    if n_nodes == 0 {
        return Err(Error::parse(content_path, 0, "no nodes"));
    }
    let features = DenseMatrix::new(n_nodes, feature_dim.unwrap_or(0), values)?;

    let cites = read_to_string(cites_path)?;
    let mut edges = BTreeSet::new();
    let mut skipped = 0;
    for (lineno, line) in cites.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t').map(str::trim);
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::parse(
                cites_path,
                lineno + 1,
                "expected two node ids",
            ));
        };
        match (index_of.get(a), index_of.get(b)) {
            (Some(&i), Some(&j)) => {
                if i != j {
                    edges.insert(canonical(i, j));
                }
            }
            _ => skipped += 1,
        }
    }

    Ok(CitationDataset {
        n_nodes,
        features,
        edges: edges.into_iter().collect(),
        labels: Some(labels),
        node_ids,
        skipped_cites: skipped,
    })
}

fn parse_feature_file(path: &Path) -> Result<DenseMatrix> {
    let text = read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `N D` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, hline + 1, "header must be two integers `N D`"))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::parse(
            path,
            hline + 1,
            "header must be two integers `N D`",
        ));
    };
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        if seen == rows {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("more than {rows} feature rows"),
            ));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("bad feature value {tok:?}"))
            })?;
            values.push(v);
        }
        if values.len() - before != cols {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("expected {cols} values, found {}", values.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::parse(
            path,
            0,
            format!("expected {rows} feature rows, found {seen}"),
        ));
    }
    DenseMatrix::new(rows, cols, values)
}

/// Loads a whitespace-separated integer edge list; `#` lines are comments.
///
/// The node count comes from `n_nodes`, else the feature header, else the
/// largest index plus one.
pub fn load_edgelist(
    edges_path: &Path,
    features_path: Option<&Path>,
    n_nodes: Option<usize>,
) -> Result<CitationDataset> {
    let features = features_path.map(parse_feature_file).transpose()?;
    if let (Some(f), Some(n)) = (&features, n_nodes) {
        if f.rows() != n {
            return Err(Error::InvalidArgument(format!(
                "feature file has {} rows but n_nodes = {n}",
                f.rows()
            )));
        }
    }
    let declared = n_nodes.or(features.as_ref().map(DenseMatrix::rows));

    let text = read_to_string(edges_path)?;
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parsed: Option<Vec<usize>> = toks.iter().map(|t| t.parse().ok()).collect();
        let (i, j) = match parsed.as_deref() {
            Some(&[i, j]) => (i, j),
            _ => {
                return Err(Error::parse(
                    edges_path,
                    lineno + 1,
                    format!("expected two non-negative integers, got {line:?}"),
                ))
            }
        };
        if let Some(n) = declared {
            if i >= n || j >= n {
                return Err(Error::parse(
                    edges_path,
                    lineno + 1,
                    format!("node index {} out of range for {n} nodes", i.max(j)),
                ));
            }
        }
        raw.push((i, j));
    }

    let n_nodes =
        declared.unwrap_or_else(|| raw.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
    if n_nodes == 0 {
        return Err(Error::parse(edges_path, 0, "no nodes"));
    }
    let edges: BTreeSet<Edge> = raw
        .into_iter()
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| canonical(i, j))
        .collect();

    Ok(CitationDataset {
        n_nodes,
        features: features.unwrap_or_else(|| DenseMatrix::zeros(n_nodes, 0)),
        edges: edges.into_iter().collect(),
        labels: None,
        node_ids: (0..n_nodes).map(|i| i.to_string()).collect(),
        skipped_cites: 0,
    })
}

/// Whether empty validation/test partitions are acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitProfile {
    /// Validation and test partitions must each hold at least one edge.
    Benchmark,
    /// Empty partitions allowed, e.g. to embed the whole graph.
    Library,
}

/// Held-out edges and sampled non-edges for link prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    pub val_edges: Vec<Edge>,
    pub val_nonedges: Vec<Edge>,
    pub test_edges: Vec<Edge>,
    pub test_nonedges: Vec<Edge>,
    pub train_edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Val,
    Test,
}

impl EdgeSplit {
    pub fn edges(&self, which: Partition) -> &[Edge] {
        match which {
            Partition::Val => &self.val_edges,
            Partition::Test => &self.test_edges,
        }
    }

    pub fn nonedges(&self, which: Partition) -> &[Edge] {
        match which {
            Partition::Val => &self.val_nonedges,
            Partition::Test => &self.test_nonedges,
        }
    }

    /// Largest node index mentioned anywhere, plus one.
    pub fn min_node_count(&self) -> usize {
        [
            &self.val_edges,
            &self.val_nonedges,
            &self.test_edges,
            &self.test_nonedges,
            &self.train_edges,
        ]
        .iter()
        .flat_map(|l| l.iter())
        .map(|&(i, j)| i.max(j) + 1)
        .max()
        .unwrap_or(0)
    }

    /// Checks that the split fits a graph of `n_nodes` nodes.
    pub fn check_node_count(&self, n_nodes: usize) -> Result<()> {
        if let Some(n) = self.n_nodes {
            if n != n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "split was made for {n} nodes, dataset has {n_nodes}"
                )));
            }
        }
        let needed = self.min_node_count();
        if needed > n_nodes {
            return Err(Error::IndexOutOfRange {
                what: "split node index",
                index: needed - 1,
                bound: n_nodes,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

fn fraction_count(n_edges: usize, frac: f64) -> usize {
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    (n_edges as f64 * frac + 1e-9).floor() as usize
}

/// Randomly holds out `⌊E·val_frac⌋` validation and `⌊E·test_frac⌋` test
/// edges, and samples as many non-edges for each by rejection against the
/// full edge set. Leftover edges are used for training.
pub fn split_edges(
    data: &CitationDataset,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
    profile: SplitProfile,
) -> Result<EdgeSplit> {
    for (name, f) in [("val_frac", val_frac), ("test_frac", test_frac)] {
        if !f.is_finite() || f < 0.0 {
            return Err(Error::Split(format!(
                "{name} must be a non-negative number, got {f}"
            )));
        }
    }
    if val_frac + test_frac >= 1.0 {
        return Err(Error::Split(format!(
            "val_frac + test_frac must be < 1, got {}",
            val_frac + test_frac
        )));
    }
    let n_edges = data.edges.len();
    let n_val = fraction_count(n_edges, val_frac);
    let n_test = fraction_count(n_edges, test_frac);
    if profile == SplitProfile::Benchmark && (n_val == 0 || n_test == 0) {
        return Err(Error::Split(format!(
            "{n_edges} edges give {n_val} validation and {n_test} test edges; both must be at least 1"
        )));
    }

    let mut rng = SeededRng::new(seed);
    let mut edges = data.edges.clone();
    edges.sort_unstable();
    edges.dedup();
    rng.shuffle(&mut edges);
    let mut test_edges = edges[..n_test].to_vec();
    let mut val_edges = edges[n_test..n_test + n_val].to_vec();
    let mut train_edges = edges[n_test + n_val..].to_vec();
    test_edges.sort_unstable();
    val_edges.sort_unstable();
    train_edges.sort_unstable();

    let edge_set: HashSet<Edge> = data.edges.iter().copied().collect();
    let mut taken = HashSet::new();
    let required = n_test + n_val;
    let max_attempts = 100 * required;
    let mut attempts = 0;
    let mut sample = |count: usize, attempts: &mut usize| -> Result<Vec<Edge>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            if *attempts >= max_attempts || data.n_nodes < 2 {
                return Err(Error::Split(format!(
                    "could not sample {required} non-edges within {max_attempts} draws; graph too dense"
                )));
            }
            *attempts += 1;
            let i = rng.below(data.n_nodes as u64) as usize;
            let j = rng.below(data.n_nodes as u64) as usize;
            if i == j {
                continue;
            }
            let key = canonical(i, j);
            if edge_set.contains(&key) || !taken.insert(key) {
                continue;
            }
            out.push(key);
        }
        Ok(out)
    };
    let test_nonedges = sample(n_test, &mut attempts)?;
    let val_nonedges = sample(n_val, &mut attempts)?;

    Ok(EdgeSplit {
        seed,
        n_nodes: Some(data.n_nodes),
        val_edges,
        val_nonedges,
        test_edges,
        test_nonedges,
        train_edges,
    })
}

/// Symmetric unit adjacency over the training edges, with self-loops.
pub fn build_train_adjacency(data: &CitationDataset, split: &EdgeSplit) -> Result<SparseAdjacency> {
    split.check_node_count(data.n_nodes)?;
    Ok(SparseAdjacency::from_edges(data.n_nodes, &split.train_edges)?.add_self_loops())
}
