//! Separable quadratic programs over the probability simplex.
//!
//! `min sum_k a_k t_k^2 + b_k t_k  s.t.  t >= 0, sum_k t_k = 1`
//!
//! The KKT conditions give `t_k = max(0, (eta - b_k) / (2 a_k))` for a scalar
//! multiplier `eta` chosen so the coordinates sum to one ("water-filling").

use crate::error::{FnmfError, Result};

/// Floor applied to the quadratic coefficients so the water-filling form
/// stays defined when a feature carries no mass.
pub const MIN_QUADRATIC: f64 = 1e-12;

const BISECTION_WIDTH: f64 = 1e-14;
const MAX_BISECTIONS: usize = 400;

/// Coefficients of a separable QP over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSimplexQP {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SeparableSimplexQP {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(FnmfError::domain(format!(
                "coefficient vectors must be non-empty and equal length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if let Some(v) = a.iter().chain(&b).find(|v| !v.is_finite()) {
            return Err(FnmfError::domain(format!("non-finite coefficient {v}")));
        }
        if let Some(v) = a.iter().find(|&&v| v < 0.0) {
            return Err(FnmfError::domain(format!(
                "quadratic coefficient {v} is negative"
            )));
        }
        Ok(SeparableSimplexQP { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(theta)
            .map(|((a, b), t)| a * t * t + b * t)
            .sum()
    }

    fn clamped(&self, k: usize) -> f64 {
        self.a[k].max(MIN_QUADRATIC)
    }

    /// Total mass placed by multiplier `eta`, minus one.
    fn excess(&self, eta: f64) -> f64 {
        (0..self.dim())
            .map(|k| ((eta - self.b[k]) / (2.0 * self.clamped(k))).max(0.0))
            .sum::<f64>()
            - 1.0
    }

    /// Multiplier solving the linear system for a fixed active set.
    fn active_set_eta(&self, eta: f64) -> Option<f64> {
        let (mut num, mut den) = (1.0, 0.0);
        for k in 0..self.dim() {
            if self.b[k] < eta {
                let inv = 1.0 / (2.0 * self.clamped(k));
                num += self.b[k] * inv;
                den += inv;
            }
        }
        (den > 0.0).then(|| num / den)
    }
}

/// Point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Wraps `theta`, checking nonnegativity and unit sum (within 1e-12).
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let sum: f64 = theta.iter().sum();
        if theta.is_empty()
            || theta.iter().any(|&t| t.is_nan() || t < 0.0)
            || (sum - 1.0).abs() > 1e-12
        {
            return Err(FnmfError::domain(format!(
                "not a simplex point (sum {sum})"
            )));
        }
        Ok(SimplexPoint(theta))
    }

    /// The centroid `1/d`.
    pub fn uniform(d: usize) -> Self {
        SimplexPoint(vec![1.0 / d as f64; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Clamps negatives to zero and rescales to unit sum.
pub(crate) fn renormalize(theta: &mut [f64]) {
    for t in theta.iter_mut() {
        if t.is_nan() || *t < 0.0 {
            *t = 0.0;
        }
    }
    let sum: f64 = theta.iter().sum();
    if sum > 0.0 {
        theta.iter_mut().for_each(|t| *t /= sum);
    } else {
        let u = 1.0 / theta.len() as f64;
        theta.iter_mut().for_each(|t| *t = u);
    }
}

/// Global minimizer of the QP.
pub fn solve(qp: &SeparableSimplexQP) -> SimplexPoint {
    let d = qp.dim();
    if d == 1 {
        return SimplexPoint(vec![1.0]);
    }
    let bmin = qp.b.iter().copied().fold(f64::INFINITY, f64::min);
    let bmax = qp.b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amax = (0..d).map(|k| qp.clamped(k)).fold(0.0, f64::max);

    // excess(lo) = -1 < 0 <= excess(hi)
    let mut lo = bmin;
    let mut hi = bmax + 2.0 * amax * d as f64;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if qp.excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Bisection pins down the active set; solve for eta on it exactly.
    let mut eta = 0.5 * (lo + hi);
    if let Some(exact) = qp.active_set_eta(eta) {
        let consistent = (0..d).all(|k| (qp.b[k] < eta) == (qp.b[k] < exact) || qp.b[k] == exact);
        if consistent {
            eta = exact;
        }
    }

    let mut theta: Vec<f64> = (0..d)
        .map(|k| ((eta - qp.b[k]) / (2.0 * qp.clamped(k))).max(0.0))
        .collect();
    // Shift eta along the support to close the unit-sum gap. Nearly flat
    // coordinates absorb most of it instead of every coordinate being
    // rescaled.
    let elastic: f64 = (0..d)
        .filter(|&k| theta[k] > 0.0)
        .map(|k| 1.0 / (2.0 * qp.clamped(k)))
        .sum();
    if elastic > 0.0 {
        let gap = 1.0 - theta.iter().sum::<f64>();
        for (k, t) in theta.iter_mut().enumerate() {
            if *t > 0.0 {
                *t += gap / (2.0 * qp.clamped(k) * elastic);
            }
        }
    }
    renormalize(&mut theta);
    SimplexPoint(theta)
}

/// Largest violation of the KKT conditions at `point`: spread of
/// `2 a_k t_k + b_k` over the support, and how far any off-support
/// coordinate falls below the support level.
pub fn kkt_residual(qp: &SeparableSimplexQP, point: &SimplexPoint) -> f64 {
    let grad: Vec<f64> = point
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, t)| 2.0 * qp.clamped(k) * t + qp.b[k])
        .collect();
    let support: Vec<f64> = point
        .as_slice()
        .iter()
        .zip(&grad)
        .filter(|(t, _)| **t > 0.0)
        .map(|(_, g)| *g)
        .collect();
    if support.is_empty() {
        return f64::INFINITY;
    }
    let level = support.iter().sum::<f64>() / support.len() as f64;
    let spread = support
        .iter()
        .map(|g| (g - level).abs())
        .fold(0.0, f64::max);
    let below = point
        .as_slice()
        .iter()
        .zip(&grad)
        .filter(|(t, _)| **t == 0.0)
        .map(|(_, g)| (level - g).max(0.0))
        .fold(0.0, f64::max);
    spread.max(below)
}

/// Euclidean projection onto the simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> SimplexPoint {
    debug_assert!(!v.is_empty() && v.iter().all(|x| x.is_finite()));
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            shift = t;
        }
    }
    let mut theta: Vec<f64> = v.iter().map(|x| (x - shift).max(0.0)).collect();
    renormalize(&mut theta);
    SimplexPoint(theta)
}
