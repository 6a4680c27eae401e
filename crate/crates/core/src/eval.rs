//! Link-prediction scoring with ROC-AUC and average precision.

use crate::dataset::{Edge, EdgeSplit, Partition};
use crate::error::{Error, Result};
use crate::model::decode_pair_logit;
use crate::numerics::{sigmoid_stable, DenseMatrix};
use serde::{Deserialize, Serialize};

/// Scores of held-out edges (`positives`) and sampled non-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPairs {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl ScoredPairs {
    fn check(&self) -> Result<()> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "metrics need both classes, got {} positives and {} negatives",
                self.positives.len(),
                self.negatives.len()
            )));
        }
        if self
            .positives
            .iter()
            .chain(&self.negatives)
            .any(|s| !s.is_finite())
        {
            return Err(Error::NonFinite("scores".into()));
        }
        Ok(())
    }
}

/// `σ(zᵢᵀzⱼ)` for each pair, in order.
pub fn score_pairs(z: &DenseMatrix, pairs: &[Edge]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(i, j)| decode_pair_logit(z, i, j).map(sigmoid_stable))
        .collect()
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half.
pub fn roc_auc(s: &ScoredPairs) -> Result<f64> {
    s.check()?;
    let mut neg = s.negatives.clone();
    neg.sort_by(f64::total_cmp);
    // For each positive: #negatives strictly below plus half of the ties.
    let mut wins2: u128 = 0;
    for &p in &s.positives {
        let below = neg.partition_point(|&v| v < p);
        let not_above = neg.partition_point(|&v| v <= p);
        wins2 += 2 * below as u128 + (not_above - below) as u128;
    }
    let total = 2 * s.positives.len() as u128 * s.negatives.len() as u128;
    Ok(wins2 as f64 / total as f64)
}

/// Mean precision at the rank of each positive, scores descending, with
/// negatives placed ahead of equal-scored positives.
pub fn average_precision(s: &ScoredPairs) -> Result<f64> {
    s.check()?;
    let mut ranked: Vec<(f64, bool)> = s
        .positives
        .iter()
        .map(|&v| (v, true))
        .chain(s.negatives.iter().map(|&v| (v, false)))
        .collect();
    // false < true, so on equal scores negatives sort first.
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &(_, is_pos)) in ranked.iter().enumerate() {
        if is_pos {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / s.positives.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub ap: f64,
}

/// Scores one partition of the split and returns AUC and AP on
/// probabilities.
pub fn evaluate(z: &DenseMatrix, split: &EdgeSplit, which: Partition) -> Result<Metrics> {
    let pairs = ScoredPairs {
        positives: score_pairs(z, split.edges(which))?,
        negatives: score_pairs(z, split.nonedges(which))?,
    };
    Ok(Metrics {
        auc: roc_auc(&pairs)?,
        ap: average_precision(&pairs)?,
    })
}
