//! Hard clustering of learned representations and external scores
//! (accuracy under the best label matching, normalized mutual information).

mod hungarian;
mod kmeans;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{FnmfError, Result};

pub use hungarian::min_cost_assignment;
pub use kmeans::{kmeans, KMeansResult};

/// Number of k-means restarts used by the evaluation protocol.
pub const DEFAULT_KMEANS_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub acc: f64,
    pub nmi: f64,
}

impl ClusteringResult {
    pub fn evaluate(assignments: Vec<usize>, truth: &[usize]) -> Result<Self> {
        let acc = accuracy(&assignments, truth)?;
        let nmi = nmi(&assignments, truth)?;
        Ok(ClusteringResult {
            assignments,
            acc,
            nmi,
        })
    }
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(FnmfError::domain(format!(
            "prediction length {} does not match truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(FnmfError::domain("cannot score an empty labelling"));
    }
    Ok(())
}

/// Contingency table with rows indexed by predicted label and columns by
/// true label (both compressed to `0..`).
pub fn contingency(pred: &[usize], truth: &[usize]) -> Array2<usize> {
    let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for &l in labels {
            let next = map.len();
            map.entry(l).or_insert(next);
        }
        map
    };
    let (pi, ti) = (index(pred), index(truth));
    let mut table = Array2::zeros((pi.len(), ti.len()));
    for (p, t) in pred.iter().zip(truth) {
        table[[pi[p], ti[t]]] += 1;
    }
    table
}

/// Fraction of samples matched under the best one-to-one mapping from
/// predicted to true labels.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let table = contingency(pred, truth);
    let size = table.nrows().max(table.ncols());
    let top = table.iter().copied().max().unwrap_or(0) as f64;
    let mut cost = Array2::from_elem((size, size), top);
    for ((r, c), &count) in table.indexed_iter() {
        cost[[r, c]] = top - count as f64;
    }
    let assignment = min_cost_assignment(&cost);
    let matched: usize = assignment
        .iter()
        .enumerate()
        .filter(|&(r, &c)| r < table.nrows() && c < table.ncols())
        .map(|(r, &c)| table[[r, c]])
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}

/// `I(pred; truth) / sqrt(H(pred) H(truth))`, natural logarithms. Identical
/// partitions score 1; a degenerate (zero-entropy) side otherwise scores 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let table = contingency(pred, truth);
    let n = pred.len() as f64;
    let rows: Vec<f64> = table.rows().into_iter().map(|r| r.sum() as f64).collect();
    let cols: Vec<f64> = table
        .columns()
        .into_iter()
        .map(|c| c.sum() as f64)
        .collect();

    let one_per_line = |lines: ndarray::iter::Lanes<'_, usize, ndarray::Ix1>| {
        lines
            .into_iter()
            .all(|l| l.iter().filter(|&&v| v > 0).count() == 1)
    };
    if table.nrows() == table.ncols() && one_per_line(table.rows()) && one_per_line(table.columns())
    {
        return Ok(1.0);
    }

    let entropy = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| -(c / n) * (c / n).ln())
            .sum()
    };
    let (hp, ht) = (entropy(&rows), entropy(&cols));
    if hp <= 0.0 || ht <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for ((r, c), &count) in table.indexed_iter() {
        if count > 0 {
            let nij = count as f64;
            mi += nij / n * (n * nij / (rows[r] * cols[c])).ln();
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}
