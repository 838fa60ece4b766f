//! K-nearest-neighbour similarity graph with adaptive neighbour weights and
//! its (symmetrized) graph Laplacian.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::datasets::DataMatrix;
use crate::error::{FnmfError, Result};

/// Default neighbourhood size used in the experiments.
pub const DEFAULT_NEIGHBORS: usize = 5;

/// Sparse row-stochastic similarity graph. Row `i` lists `(j, s_ij)` pairs
/// sorted by neighbour rank; the diagonal is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    rows: Vec<Vec<(usize, f64)>>,
    neighborhood_size: usize,
}

impl SimilarityGraph {
    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn neighborhood_size(&self) -> usize {
        self.neighborhood_size
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut s = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                s[[i, j]] = w;
            }
        }
        s
    }

    /// Writes the graph as an `i,j,weight` edge list.
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| FnmfError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["i", "j", "weight"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, s) in row {
                w.write_record([i.to_string(), j.to_string(), s.to_string()])?;
            }
        }
        w.flush().map_err(|e| FnmfError::io(path, e))?;
        Ok(())
    }
}

/// Builds the adaptive-neighbour graph over the samples (columns) of `x`.
///
/// For sample `i` with sorted squared distances `d_1 <= ... <= d_{K+1}` to
/// the other samples, the `j`-th neighbour (`j <= K`) receives
/// `(d_{K+1} - d_j) / (K d_{K+1} - sum_{h<=K} d_h)`. Distance ties are
/// broken by sample index. When the `K+1` nearest distances all coincide the
/// row falls back to uniform `1/K` weights.
pub fn build_adaptive_knn_graph(x: &DataMatrix, k: usize) -> Result<SimilarityGraph> {
    build_from_columns(x.values().view(), k)
}

pub(crate) fn build_from_columns(points: ArrayView2<'_, f64>, k: usize) -> Result<SimilarityGraph> {
    let n = points.ncols();
    if k < 1 || k + 2 > n {
        return Err(FnmfError::domain(format!(
            "neighbourhood size {k} must satisfy 1 <= K <= n-2 = {}",
            n.saturating_sub(2)
        )));
    }
    let samples = points.t().as_standard_layout().to_owned();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = samples.row(i);
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2 = xi
                        .iter()
                        .zip(samples.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (d2, j)
                })
                .collect();
            let by_dist_then_index =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            dist.select_nth_unstable_by(k, by_dist_then_index);
            dist.truncate(k + 1);
            dist.sort_unstable_by(by_dist_then_index);
            adaptive_row(&dist, k)
        })
        .collect();
    Ok(SimilarityGraph {
        rows,
        neighborhood_size: k,
    })
}

/// `nearest` holds the `k+1` nearest `(distance, index)` pairs in order.
fn adaptive_row(nearest: &[(f64, usize)], k: usize) -> Vec<(usize, f64)> {
    let cutoff = nearest[k].0;
    let head: f64 = nearest[..k].iter().map(|p| p.0).sum();
    let denom = k as f64 * cutoff - head;
    if denom > 0.0 {
        nearest[..k]
            .iter()
            .map(|&(d, j)| (j, (cutoff - d) / denom))
            .filter(|&(_, w)| w > 0.0)
            .collect()
    } else {
        nearest[..k]
            .iter()
            .map(|&(_, j)| (j, 1.0 / k as f64))
            .collect()
    }
}

/// Laplacian `L = D - S_sym` with `S_sym = (S + S^T) / 2`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl Laplacian {
    pub fn n_nodes(&self) -> usize {
        self.degrees.len()
    }

    /// Symmetrized neighbour weights of node `i` (off-diagonal only).
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `S_sym * V` for a row-per-node matrix `V`.
    pub fn adjacency_times(&self, v: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(v.dim());
        self.add_adjacency_times(v, 1.0, &mut out);
        out
    }

    /// `out += scale * S_sym * V`.
    pub fn add_adjacency_times(&self, v: ArrayView2<'_, f64>, scale: f64, out: &mut Array2<f64>) {
        for (i, mut row) in out.outer_iter_mut().enumerate() {
            for &(r, s) in &self.adjacency[i] {
                row.scaled_add(scale * s, &v.row(r));
            }
        }
    }

    /// `Tr(V^T L V)` for a row-per-node matrix `V`.
    pub fn quadratic_form(&self, v: ArrayView2<'_, f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_nodes() {
            let vi = v.row(i);
            total += self.degrees[i] * vi.dot(&vi);
            for &(r, s) in &self.adjacency[i] {
                total -= s * vi.dot(&v.row(r));
            }
        }
        total
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut l = Array2::zeros((n, n));
        for i in 0..n {
            l[[i, i]] = self.degrees[i];
            for &(j, s) in &self.adjacency[i] {
                l[[i, j]] -= s;
            }
        }
        l
    }
}

pub fn laplacian(graph: &SimilarityGraph) -> Laplacian {
    let n = graph.n_nodes();
    let mut sym: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        for &(j, w) in graph.row(i) {
            *sym[i].entry(j).or_insert(0.0) += 0.5 * w;
            *sym[j].entry(i).or_insert(0.0) += 0.5 * w;
        }
    }
    let adjacency: Vec<Vec<(usize, f64)>> =
        sym.into_iter().map(|m| m.into_iter().collect()).collect();
    let degrees = adjacency
        .iter()
        .map(|row| row.iter().map(|(_, s)| s).sum())
        .collect();
    Laplacian { adjacency, degrees }
}
