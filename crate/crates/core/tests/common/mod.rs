//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use fnmf_core::DataMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_data(rng: &mut ChaCha8Rng, d: usize, n: usize) -> DataMatrix {
    DataMatrix::new(Array2::from_shape_simple_fn((d, n), || rng.random()), None).unwrap()
}

pub fn qp_objective(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(theta)
        .map(|((a, b), t)| a * t * t + b * t)
        .sum()
}

/// Minimum of `sum a_k t_k^2 + b_k t_k` over the simplex grid with spacing
/// `1 / steps`.
pub fn simplex_grid_min(a: &[f64], b: &[f64], steps: usize) -> f64 {
    let d = a.len();
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; d];
    grid_rec(a, b, steps, 0, steps, &mut counts, &mut best);
    debug_assert!(d >= 1);
    best
}

fn grid_rec(
    a: &[f64],
    b: &[f64],
    steps: usize,
    k: usize,
    left: usize,
    counts: &mut [usize],
    best: &mut f64,
) {
    let d = a.len();
    if k == d - 1 {
        counts[k] = left;
        let theta: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        *best = best.min(qp_objective(a, b, &theta));
        return;
    }
    for c in 0..=left {
        counts[k] = c;
        grid_rec(a, b, steps, k + 1, left - c, counts, best);
    }
}

/// Exact minimum by enumerating supports. Every `a_k` must be positive.
/// On a support `S` the stationary point is `t_k = (eta - b_k) / (2 a_k)`
/// with `eta` fixed by `sum t_k = 1`; the optimum is the best feasible one.
pub fn simplex_enumeration_min(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let d = a.len();
    assert!(a.iter().all(|&v| v > 0.0));
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|k| mask & (1 << k) != 0).collect();
        let inv: f64 = support.iter().map(|&k| 1.0 / (2.0 * a[k])).sum();
        let shifted: f64 = support.iter().map(|&k| b[k] / (2.0 * a[k])).sum();
        let eta = (1.0 + shifted) / inv;
        let mut theta = vec![0.0; d];
        let mut feasible = true;
        for &k in &support {
            let t = (eta - b[k]) / (2.0 * a[k]);
            if t < -1e-12 {
                feasible = false;
                break;
            }
            theta[k] = t.max(0.0);
        }
        if feasible {
            let f = qp_objective(a, b, &theta);
            if f < best.0 {
                best = (f, theta);
            }
        }
    }
    best
}

/// Accuracy by trying every injective relabelling of predicted clusters.
pub fn brute_force_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let size = kp.max(kt);
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = 0usize;
    permutations(&mut perm, 0, &mut |map| {
        let hits = pred
            .iter()
            .zip(truth)
            .filter(|(&p, &t)| map[p] == t)
            .count();
        best = best.max(hits);
    });
    best as f64 / pred.len() as f64
}

fn permutations(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permutations(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// `I / sqrt(H_pred H_truth)` from raw counts; 1 for identical partitions up
/// to relabelling, 0 when an entropy vanishes otherwise.
pub fn reference_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut cp: HashMap<usize, f64> = HashMap::new();
    let mut ct: HashMap<usize, f64> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *joint.entry((p, t)).or_default() += 1.0;
        *cp.entry(p).or_default() += 1.0;
        *ct.entry(t).or_default() += 1.0;
    }
    let entropy =
        |m: &HashMap<usize, f64>| -> f64 { m.values().map(|&c| -(c / n) * (c / n).ln()).sum() };
    let same_partition = joint.len() == cp.len() && joint.len() == ct.len();
    if same_partition {
        return 1.0;
    }
    let (hp, ht) = (entropy(&cp), entropy(&ct));
    if hp == 0.0 || ht == 0.0 {
        return 0.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(p, t), &c)| (c / n) * ((c * n) / (cp[&p] * ct[&t])).ln())
        .sum();
    mi / (hp * ht).sqrt()
}
