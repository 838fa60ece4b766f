//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FnmfError, Result};
use crate::seeded_rng;

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    /// `k × dim`.
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

/// Clusters the rows of `points` into `k` groups, keeping the restart with
/// the smallest within-cluster sum of squares. Deterministic for a seed.
pub fn kmeans(
    points: ArrayView2<'_, f64>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(FnmfError::domain(format!("k = {k} must lie in 1..={n}")));
    }
    if restarts == 0 {
        return Err(FnmfError::domain("restarts must be >= 1"));
    }
    let mut master = seeded_rng(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let mut rng = seeded_rng(master.random());
        let run = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid, lowest index on ties.
fn nearest(p: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.outer_iter().enumerate() {
        let d = sq_dist(p, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    centroids
        .row_mut(0)
        .assign(&points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let n = points.nrows();
    let mut centroids = plus_plus(points, k, rng);
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest(points.row(i), &centroids);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
            dists[i] = d;
        }

        // Empty clusters take the point farthest from its own centroid.
        let mut counts = vec![0usize; k];
        assignments.iter().for_each(|&a| counts[a] += 1);
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = c;
                counts[c] = 1;
                dists[i] = 0.0;
                changed = true;
            }
        }

        let mut sums = Array2::<f64>::zeros(centroids.dim());
        for (i, &a) in assignments.iter().enumerate() {
            let mut row = sums.row_mut(a);
            row += &points.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mut row = sums.row_mut(c);
                row /= count as f64;
                centroids.row_mut(c).assign(&row);
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(assignments[i])))
        .sum();
    KMeansResult {
        assignments,
        centroids,
        wcss,
    }
}
