//! Classic least-squares NMF with multiplicative updates, used as the
//! comparison baseline.

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{FnmfError, Result};
use crate::fnmf::{init_scale, random_factor, relative_change, SolveTrace};
use crate::seeded_rng;

/// Form of the multiplicative step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// `u <- u * N / D`.
    #[default]
    LeeSeung,
    /// `u <- u * sqrt(N / D)`, the form the feature-weighted solver uses.
    SquareRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub c: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub rule: UpdateRule,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            c: 2,
            max_iters: 200,
            rel_tol: 1e-6,
            epsilon: 1e-12,
            seed: 0,
            rule: UpdateRule::LeeSeung,
        }
    }
}

/// `X ≈ U V^T` with `U: d × c`, `V: n × c`.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactors {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

/// `sum_i || x_i - U v_i^T ||^2`.
pub fn reconstruction_error(x: &DataMatrix, f: &NmfFactors) -> f64 {
    let recon = f.u.dot(&f.v.t());
    Zip::from(x.values())
        .and(&recon)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
}

/// Same seeded scheme as the feature-weighted solver: U then V drawn
/// uniformly on `(0, mean(X)]`.
pub fn initialize(x: &DataMatrix, cfg: &NmfConfig) -> NmfFactors {
    let (d, n) = x.values().dim();
    let mut rng = seeded_rng(cfg.seed);
    let scale = init_scale(x);
    let u = random_factor(&mut rng, d, cfg.c, scale);
    let v = random_factor(&mut rng, n, cfg.c, scale);
    NmfFactors { u, v }
}

pub fn nmf_solve(x: &DataMatrix, cfg: &NmfConfig) -> Result<(NmfFactors, SolveTrace)> {
    if cfg.c < 1 {
        return Err(FnmfError::domain("c must be >= 1"));
    }
    nmf_solve_from(x, initialize(x, cfg), cfg)
}

pub fn nmf_solve_from(
    x: &DataMatrix,
    mut f: NmfFactors,
    cfg: &NmfConfig,
) -> Result<(NmfFactors, SolveTrace)> {
    let (d, n) = x.values().dim();
    if f.u.nrows() != d || f.v.nrows() != n || f.u.ncols() != f.v.ncols() {
        return Err(FnmfError::domain(format!(
            "factor shapes U {:?}, V {:?} do not fit data {d}x{n}",
            f.u.dim(),
            f.v.dim()
        )));
    }
    let xv = x.values();
    let initial = reconstruction_error(x, &f);
    let mut trace = SolveTrace {
        initial_objective: initial,
        block_names: vec!["u", "v"],
        ..SolveTrace::default()
    };
    let mut prev = initial;
    for iter in 1..=cfg.max_iters {
        let t0 = Instant::now();
        let num = xv.dot(&f.v);
        let den = f.u.dot(&f.v.t().dot(&f.v));
        step(&mut f.u, &num, &den, cfg);
        let t1 = Instant::now();
        let num = xv.t().dot(&f.u);
        let den = f.v.dot(&f.u.t().dot(&f.u));
        step(&mut f.v, &num, &den, cfg);
        let t2 = Instant::now();

        let current = reconstruction_error(x, &f);
        if !current.is_finite() || f.u.iter().chain(f.v.iter()).any(|v| !v.is_finite()) {
            return Err(FnmfError::Numerical {
                iteration: iter,
                block: "nmf",
                message: format!("objective evaluated to {current}"),
            });
        }
        trace.objective_per_iter.push(current);
        trace
            .block_seconds
            .push(vec![(t1 - t0).as_secs_f64(), (t2 - t1).as_secs_f64()]);
        trace.iters_run = iter;
        if relative_change(prev, current) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        prev = current;
    }
    Ok((f, trace))
}

fn step(target: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, cfg: &NmfConfig) {
    let eps = cfg.epsilon;
    Zip::from(target).and(num).and(den).for_each(|t, &n, &d| {
        if *t != 0.0 {
            let ratio = n / (d + eps);
            *t *= match cfg.rule {
                UpdateRule::LeeSeung => ratio,
                UpdateRule::SquareRoot => ratio.sqrt(),
            };
        }
    });
}
