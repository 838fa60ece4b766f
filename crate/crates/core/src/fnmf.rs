//! Feature-weighted NMF solver.
//!
//! The model factorizes `m` reweighted copies of the data,
//!
//! ```text
//! sum_i sum_j p_ij^2 || diag(theta_j) x_i - U v_i^T ||^2
//!     + lambda * sum_{j != l} <theta_j, theta_l>
//!     + beta   * Tr(V^T L V)
//! ```
//!
//! with every `theta_j` on the probability simplex, every row of `P` on the
//! simplex, and `U, V >= 0`. Each iteration runs four block updates in the
//! order theta, P, U, V. The theta and P steps are exact block minimizers;
//! the U and V steps are square-root multiplicative updates, so the objective
//! never increases.

use std::fmt;
use std::time::Instant;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{FnmfError, Result};
use crate::graph::{laplacian, Laplacian, SimilarityGraph};
use crate::seeded_rng;
use crate::simplex::{self, renormalize, SeparableSimplexQP};

/// How the component probabilities are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMode {
    /// Row-wise minimizer: `p_ij ∝ 1 / e_ij` with `e_ij` the error of
    /// sample `i` under component `j`.
    #[default]
    PerSample,
    /// Errors summed over all samples first, so every row of `P` is the same.
    PaperLiteral,
}

impl fmt::Display for PMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PMode::PerSample => "per_sample",
            PMode::PaperLiteral => "paper_literal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of basis vectors (clusters).
    pub c: usize,
    /// Number of feature weighting components.
    pub m: usize,
    /// Weight of the component diversity penalty.
    pub lambda: f64,
    /// Weight of the graph regularizer.
    pub beta: f64,
    pub max_iters: usize,
    /// Stop once the relative objective change falls below this.
    pub rel_tol: f64,
    /// Guard added to every multiplicative-update denominator.
    pub epsilon: f64,
    pub p_mode: PMode,
    pub seed: u64,
    /// Skip the theta step, keeping the initial weights.
    #[serde(default)]
    pub freeze_theta: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 2,
            m: 3,
            lambda: 1.0,
            beta: 1.0,
            max_iters: 200,
            rel_tol: 1e-6,
            epsilon: 1e-12,
            p_mode: PMode::PerSample,
            seed: 0,
            freeze_theta: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c < 1 || self.m < 1 {
            return Err(FnmfError::domain(format!(
                "c and m must be >= 1 (c = {}, m = {})",
                self.c, self.m
            )));
        }
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FnmfError::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.rel_tol.is_nan()
            || self.rel_tol < 0.0
            || self.epsilon.is_nan()
            || self.epsilon < 0.0
        {
            return Err(FnmfError::domain("rel_tol and epsilon must be >= 0"));
        }
        Ok(())
    }
}

/// The four coupled variables of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct FnmfState {
    /// `d × c` basis.
    pub u: Array2<f64>,
    /// `n × c` coefficients; row `i` represents sample `i`.
    pub v: Array2<f64>,
    /// `m × d`; row `j` is the weight vector of component `j`.
    pub theta: Array2<f64>,
    /// `n × m` component probabilities.
    pub p: Array2<f64>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl FnmfState {
    pub fn n_features(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.v.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.theta.nrows()
    }

    pub fn component(&self, j: usize) -> ArrayView1<'_, f64> {
        self.theta.row(j)
    }

    /// Returns a description of the first violated invariant, if any.
    pub fn invariant_violation(&self) -> Option<String> {
        if let Some(v) = self.u.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Some(format!("U has entry {v}"));
        }
        if let Some(v) = self.v.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Some(format!("V has entry {v}"));
        }
        for (name, mat) in [("theta", &self.theta), ("P", &self.p)] {
            for (r, row) in mat.outer_iter().enumerate() {
                if let Some(v) = row.iter().find(|v| v.is_nan() || **v < 0.0) {
                    return Some(format!("{name} row {r} has entry {v}"));
                }
                let sum = row.sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return Some(format!("{name} row {r} sums to {sum}"));
                }
            }
        }
        None
    }

    fn check_shapes(&self, x: &DataMatrix) -> Result<()> {
        let (d, n) = x.values().dim();
        let c = self.u.ncols();
        let m = self.theta.nrows();
        let ok = self.u.nrows() == d
            && self.v.dim() == (n, c)
            && self.theta.ncols() == d
            && self.p.dim() == (n, m);
        if ok {
            Ok(())
        } else {
            Err(FnmfError::domain(format!(
                "state shapes U {:?}, V {:?}, theta {:?}, P {:?} do not fit data {d}x{n}",
                self.u.dim(),
                self.v.dim(),
                self.theta.dim(),
                self.p.dim()
            )))
        }
    }

    fn first_non_finite(&self, block: Block) -> bool {
        let mat = match block {
            Block::Theta => &self.theta,
            Block::P => &self.p,
            Block::U => &self.u,
            Block::V => &self.v,
        };
        mat.iter().any(|v| !v.is_finite())
    }
}

/// One block of the alternating scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Theta,
    P,
    U,
    V,
}

impl Block {
    pub const ORDER: [Block; 4] = [Block::Theta, Block::P, Block::U, Block::V];

    pub fn name(self) -> &'static str {
        match self {
            Block::Theta => "theta",
            Block::P => "p",
            Block::U => "u",
            Block::V => "v",
        }
    }
}

/// Per-iteration record of an iterative solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    /// Objective before the first iteration.
    pub initial_objective: f64,
    /// Objective after every full iteration.
    pub objective_per_iter: Vec<f64>,
    pub iters_run: usize,
    pub converged: bool,
    pub block_names: Vec<&'static str>,
    /// Wall time of each block, one row per iteration.
    pub block_seconds: Vec<Vec<f64>>,
}

impl SolveTrace {
    /// True when no step increases the objective by more than `slack`
    /// relative to the previous value (the initial objective included).
    /// Values below `1e-12` of the initial objective count as roundoff.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let floor = 1e-12 * self.initial_objective.abs();
        let mut prev = self.initial_objective;
        for &f in &self.objective_per_iter {
            if f > prev + slack * prev.abs() && f > floor {
                return false;
            }
            prev = f;
        }
        true
    }

    /// Relative objective change of each iteration against the one before.
    pub fn relative_changes(&self) -> Vec<f64> {
        let mut prev = self.initial_objective;
        self.objective_per_iter
            .iter()
            .map(|&f| {
                let r = relative_change(prev, f);
                prev = f;
                r
            })
            .collect()
    }

    /// First (1-based) iteration whose relative change is below `tol`.
    pub fn first_iteration_below(&self, tol: f64) -> Option<usize> {
        self.relative_changes()
            .iter()
            .position(|&r| r < tol)
            .map(|i| i + 1)
    }

    pub fn mean_iteration_seconds(&self) -> f64 {
        if self.block_seconds.is_empty() {
            return 0.0;
        }
        self.block_seconds
            .iter()
            .map(|r| r.iter().sum::<f64>())
            .sum::<f64>()
            / self.block_seconds.len() as f64
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_per_iter
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }
}

pub(crate) fn relative_change(prev: f64, cur: f64) -> f64 {
    (prev - cur).abs() / prev.abs().max(f64::MIN_POSITIVE)
}

/// The three unweighted parts of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `sum_ij p_ij^2 e_ij`.
    pub reconstruction: f64,
    /// `sum_{j != l} <theta_j, theta_l>`.
    pub diversity: f64,
    /// `Tr(V^T L V)`.
    pub graph: f64,
}

impl ObjectiveTerms {
    pub fn total(&self, lambda: f64, beta: f64) -> f64 {
        self.reconstruction + lambda * self.diversity + beta * self.graph
    }
}

pub fn objective_terms(
    x: &DataMatrix,
    lap: &Laplacian,
    state: &FnmfState,
) -> Result<ObjectiveTerms> {
    state.check_shapes(x)?;
    check_graph(x, lap)?;
    let errors = component_errors(x, state);
    Ok(terms_from_errors(&errors, lap, state))
}

/// Full objective value.
pub fn objective(
    x: &DataMatrix,
    lap: &Laplacian,
    state: &FnmfState,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(objective_terms(x, lap, state)?.total(cfg.lambda, cfg.beta))
}

fn diversity(theta: &Array2<f64>) -> f64 {
    let m = theta.nrows();
    let mut total = 0.0;
    for j in 0..m {
        for l in 0..m {
            if j != l {
                total += theta.row(j).dot(&theta.row(l));
            }
        }
    }
    total
}

/// `e_ij = || theta_j ∘ x_i - recon_i ||^2` into an `n × m` buffer.
fn fill_errors(x: &DataMatrix, recon: &Array2<f64>, theta: &Array2<f64>, errors: &mut Array2<f64>) {
    let xv = x.values();
    let (d, n) = xv.dim();
    for (j, theta) in theta.outer_iter().enumerate() {
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..d {
                let r = theta[k] * xv[[k, i]] - recon[[k, i]];
                acc += r * r;
            }
            errors[[i, j]] = acc;
        }
    }
}

fn component_errors(x: &DataMatrix, state: &FnmfState) -> Array2<f64> {
    let recon = state.u.dot(&state.v.t());
    let mut errors = Array2::zeros((x.n_samples(), state.theta.nrows()));
    fill_errors(x, &recon, &state.theta, &mut errors);
    errors
}

fn sqrt_multiplicative(target: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, eps: f64) {
    Zip::from(target).and(num).and(den).for_each(|t, &n, &d| {
        if *t != 0.0 {
            *t *= (n / (d + eps)).sqrt();
        }
    });
}

/// Buffers reused across iterations. Each `refresh_*` must run after the
/// blocks it depends on change; the solve loop orders them so every quantity
/// is computed once per iteration.
struct Workspace {
    xsq: Array2<f64>,
    /// `U V^T`.
    recon: Array2<f64>,
    errors: Array2<f64>,
    /// Weighted data, `z_i = (sum_j p_ij^2 theta_j) ∘ x_i`.
    z: Array2<f64>,
    /// Row weights `w_i = sum_j p_ij^2`.
    w: Array1<f64>,
    p2: Array1<f64>,
    num: Array2<f64>,
    den: Array2<f64>,
}

impl Workspace {
    fn new(x: &DataMatrix, state: &FnmfState) -> Self {
        let (d, n) = x.values().dim();
        let (c, m) = (state.u.ncols(), state.theta.nrows());
        Workspace {
            xsq: x.values().mapv(|v| v * v),
            recon: Array2::zeros((d, n)),
            errors: Array2::zeros((n, m)),
            z: Array2::zeros((d, n)),
            w: Array1::zeros(n),
            p2: Array1::zeros(n),
            num: Array2::zeros((n, c)),
            den: Array2::zeros((n, c)),
        }
    }

    fn refresh_recon(&mut self, state: &FnmfState) {
        general_mat_mul(1.0, &state.u, &state.v.t(), 0.0, &mut self.recon);
    }

    /// Needs a current `recon`.
    fn refresh_errors(&mut self, x: &DataMatrix, state: &FnmfState) {
        fill_errors(x, &self.recon, &state.theta, &mut self.errors);
    }

    fn refresh_weighted(&mut self, x: &DataMatrix, state: &FnmfState) {
        let xv = x.values();
        let d = xv.nrows();
        for (i, p) in state.p.outer_iter().enumerate() {
            self.w[i] = p.iter().map(|p| p * p).sum();
            for k in 0..d {
                let coef: f64 = p
                    .iter()
                    .zip(state.theta.column(k))
                    .map(|(p, t)| p * p * t)
                    .sum();
                self.z[[k, i]] = xv[[k, i]] * coef;
            }
        }
    }

    /// Needs current `errors`.
    fn objective(&self, lap: &Laplacian, state: &FnmfState, cfg: &SolverConfig) -> f64 {
        terms_from_errors(&self.errors, lap, state).total(cfg.lambda, cfg.beta)
    }
}

fn terms_from_errors(errors: &Array2<f64>, lap: &Laplacian, state: &FnmfState) -> ObjectiveTerms {
    let reconstruction = Zip::from(errors)
        .and(&state.p)
        .fold(0.0, |acc, &e, &p| acc + p * p * e);
    ObjectiveTerms {
        reconstruction,
        diversity: diversity(&state.theta),
        graph: lap.quadratic_form(state.v.view()),
    }
}

fn check_graph(x: &DataMatrix, lap: &Laplacian) -> Result<()> {
    if lap.n_nodes() != x.n_samples() {
        return Err(FnmfError::domain(format!(
            "graph has {} nodes for {} samples",
            lap.n_nodes(),
            x.n_samples()
        )));
    }
    Ok(())
}

/// Theta step: each component in turn solves its simplex QP, seeing the
/// latest weights of the others.
pub fn update_theta(x: &DataMatrix, state: &mut FnmfState, cfg: &SolverConfig) -> Result<()> {
    state.check_shapes(x)?;
    let mut ws = Workspace::new(x, state);
    ws.refresh_recon(state);
    theta_step(x, &mut ws, state, cfg)
}

/// Needs a current `recon`.
fn theta_step(
    x: &DataMatrix,
    ws: &mut Workspace,
    state: &mut FnmfState,
    cfg: &SolverConfig,
) -> Result<()> {
    let xv = x.values();
    let d = xv.nrows();
    for j in 0..state.theta.nrows() {
        Zip::from(&mut ws.p2)
            .and(state.p.column(j))
            .for_each(|q, &p| *q = p * p);
        let others = state.theta.sum_axis(Axis(0)) - state.theta.row(j);
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        for k in 0..d {
            a.push(ws.xsq.row(k).dot(&ws.p2));
            let xr = Zip::from(xv.row(k))
                .and(ws.recon.row(k))
                .and(&ws.p2)
                .fold(0.0, |acc, &x, &r, &q| acc + x * r * q);
            // The penalty counts each unordered pair twice, hence 2 * lambda.
            b.push(2.0 * cfg.lambda * others[k] - 2.0 * xr);
        }
        let qp = SeparableSimplexQP::new(a, b)?;
        let theta = simplex::solve(&qp);
        state
            .theta
            .row_mut(j)
            .assign(&ArrayView1::from(theta.as_slice()));
    }
    Ok(())
}

/// Minimizer of `sum_j p_j^2 e_j` over the simplex. Zero errors take all
/// the mass, split evenly.
pub fn inverse_error_weights(errors: ArrayView1<'_, f64>) -> Vec<f64> {
    let zeros = errors.iter().filter(|&&e| e <= 0.0).count();
    let mut p: Vec<f64> = if zeros > 0 {
        errors
            .iter()
            .map(|&e| if e <= 0.0 { 1.0 / zeros as f64 } else { 0.0 })
            .collect()
    } else {
        let emin = errors.iter().copied().fold(f64::INFINITY, f64::min);
        errors.iter().map(|&e| emin / e).collect()
    };
    renormalize(&mut p);
    p
}

/// P step.
pub fn update_p(x: &DataMatrix, state: &mut FnmfState, cfg: &SolverConfig) -> Result<()> {
    state.check_shapes(x)?;
    let errors = component_errors(x, state);
    p_step(&errors, state, cfg);
    Ok(())
}

fn p_step(errors: &Array2<f64>, state: &mut FnmfState, cfg: &SolverConfig) {
    match cfg.p_mode {
        PMode::PerSample => {
            for (i, mut row) in state.p.outer_iter_mut().enumerate() {
                let p = inverse_error_weights(errors.row(i));
                row.assign(&ArrayView1::from(&p));
            }
        }
        PMode::PaperLiteral => {
            let q = errors.sum_axis(Axis(0));
            let p = inverse_error_weights(q.view());
            for mut row in state.p.outer_iter_mut() {
                row.assign(&ArrayView1::from(&p));
            }
        }
    }
}

/// U step: `u_ik <- u_ik * sqrt(N_ik / (D_ik + eps))` with
/// `N = Z V` and `D = U V^T diag(w) V`.
pub fn update_u(x: &DataMatrix, state: &mut FnmfState, cfg: &SolverConfig) -> Result<()> {
    state.check_shapes(x)?;
    let mut ws = Workspace::new(x, state);
    ws.refresh_weighted(x, state);
    u_step(&ws, state, cfg);
    Ok(())
}

/// Needs current `z` and `w`.
fn u_step(ws: &Workspace, state: &mut FnmfState, cfg: &SolverConfig) {
    let num = ws.z.dot(&state.v);
    let c = state.v.ncols();
    let mut gram = Array2::<f64>::zeros((c, c));
    for (vi, &wi) in state.v.outer_iter().zip(&ws.w) {
        for r in 0..c {
            for s in 0..c {
                gram[[r, s]] += wi * vi[r] * vi[s];
            }
        }
    }
    let den = state.u.dot(&gram);
    sqrt_multiplicative(&mut state.u, &num, &den, cfg.epsilon);
}

/// V step, graph coupled. All rows are updated from the same snapshot of V.
pub fn update_v(
    x: &DataMatrix,
    lap: &Laplacian,
    state: &mut FnmfState,
    cfg: &SolverConfig,
) -> Result<()> {
    state.check_shapes(x)?;
    check_graph(x, lap)?;
    let mut ws = Workspace::new(x, state);
    ws.refresh_weighted(x, state);
    v_step(&mut ws, lap, state, cfg);
    Ok(())
}

/// Needs current `z` and `w`.
fn v_step(ws: &mut Workspace, lap: &Laplacian, state: &mut FnmfState, cfg: &SolverConfig) {
    let utu = state.u.t().dot(&state.u);
    general_mat_mul(1.0, &ws.z.t(), &state.u, 0.0, &mut ws.num);
    general_mat_mul(1.0, &state.v, &utu, 0.0, &mut ws.den);
    for (mut row, &wi) in ws.den.outer_iter_mut().zip(&ws.w) {
        row *= wi;
    }
    if cfg.beta > 0.0 {
        lap.add_adjacency_times(state.v.view(), cfg.beta, &mut ws.num);
        for ((mut row, vi), &deg) in ws
            .den
            .outer_iter_mut()
            .zip(state.v.outer_iter())
            .zip(lap.degrees())
        {
            row.scaled_add(cfg.beta * deg, &vi);
        }
    }
    sqrt_multiplicative(&mut state.v, &ws.num, &ws.den, cfg.epsilon);
}

/// Strictly positive uniform draws on `(0, 1]`, scaled.
pub(crate) fn random_factor(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    scale: f64,
) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || (1.0 - rng.random::<f64>()) * scale)
}

pub(crate) fn init_scale(x: &DataMatrix) -> f64 {
    let mean = x.mean_value();
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

/// Seeded starting point: U and V uniform on `(0, mean(X)]`, every theta
/// near-uniform with a small perturbation, P uniform.
pub fn initialize(x: &DataMatrix, cfg: &SolverConfig) -> Result<FnmfState> {
    cfg.validate()?;
    let (d, n) = x.values().dim();
    let mut rng = seeded_rng(cfg.seed);
    let scale = init_scale(x);
    let u = random_factor(&mut rng, d, cfg.c, scale);
    let v = random_factor(&mut rng, n, cfg.c, scale);
    let base = 1.0 / d as f64;
    let mut theta = Array2::zeros((cfg.m, d));
    for mut row in theta.outer_iter_mut() {
        let mut t: Vec<f64> = (0..d)
            .map(|_| base + rng.random::<f64>() * 0.01 * base)
            .collect();
        renormalize(&mut t);
        row.assign(&ArrayView1::from(&t));
    }
    let p = Array2::from_elem((n, cfg.m), 1.0 / cfg.m as f64);
    Ok(FnmfState { u, v, theta, p })
}

/// Builds the Laplacian of `graph`, initializes, and iterates to convergence.
pub fn solve(
    x: &DataMatrix,
    graph: &SimilarityGraph,
    cfg: &SolverConfig,
) -> Result<(FnmfState, SolveTrace)> {
    if graph.n_nodes() != x.n_samples() {
        return Err(FnmfError::domain(format!(
            "graph has {} nodes for {} samples",
            graph.n_nodes(),
            x.n_samples()
        )));
    }
    let lap = laplacian(graph);
    let state = initialize(x, cfg)?;
    solve_from(x, &lap, state, cfg, |_, _, _| {})
}

/// Iterates from a given state. `observer` sees the state after every block
/// update as `(iteration, block, state)`, iterations counted from 1.
pub fn solve_from<F>(
    x: &DataMatrix,
    lap: &Laplacian,
    mut state: FnmfState,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<(FnmfState, SolveTrace)>
where
    F: FnMut(usize, Block, &FnmfState),
{
    cfg.validate()?;
    let initial = objective(x, lap, &state, cfg)?;
    let mut trace = SolveTrace {
        initial_objective: initial,
        block_names: Block::ORDER.iter().map(|b| b.name()).collect(),
        ..SolveTrace::default()
    };
    let mut prev = initial;
    let mut ws = Workspace::new(x, &state);
    ws.refresh_recon(&state);
    for iter in 1..=cfg.max_iters {
        let mut seconds = Vec::with_capacity(4);
        for block in Block::ORDER {
            let start = Instant::now();
            match block {
                Block::Theta if cfg.freeze_theta => {}
                Block::Theta => theta_step(x, &mut ws, &mut state, cfg)?,
                Block::P => {
                    ws.refresh_errors(x, &state);
                    p_step(&ws.errors, &mut state, cfg);
                }
                Block::U => {
                    ws.refresh_weighted(x, &state);
                    u_step(&ws, &mut state, cfg);
                }
                // Theta and P are unchanged since the U step, so Z and w are current.
                Block::V => v_step(&mut ws, lap, &mut state, cfg),
            }
            seconds.push(start.elapsed().as_secs_f64());
            if state.first_non_finite(block) {
                return Err(FnmfError::Numerical {
                    iteration: iter,
                    block: block.name(),
                    message: "non-finite value in updated block".into(),
                });
            }
            observer(iter, block, &state);
        }
        ws.refresh_recon(&state);
        ws.refresh_errors(x, &state);
        let current = ws.objective(lap, &state, cfg);
        if !current.is_finite() {
            return Err(FnmfError::Numerical {
                iteration: iter,
                block: "objective",
                message: format!("objective evaluated to {current}"),
            });
        }
        trace.objective_per_iter.push(current);
        trace.block_seconds.push(seconds);
        trace.iters_run = iter;
        if relative_change(prev, current) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        prev = current;
    }
    Ok((state, trace))
}

/// With a single component the diversity penalty is an empty sum, so the
/// model reduces to one feature weighting matrix. Runs a full solve and
/// reports whether the penalty stayed exactly zero after every block.
pub fn nmf_special_case_check(
    x: &DataMatrix,
    graph: &SimilarityGraph,
    cfg: &SolverConfig,
) -> Result<bool> {
    if cfg.m != 1 {
        return Err(FnmfError::domain(format!(
            "special-case check needs m = 1, got m = {}",
            cfg.m
        )));
    }
    let lap = laplacian(graph);
    let state = initialize(x, cfg)?;
    let mut all_zero = diversity(&state.theta) == 0.0;
    solve_from(x, &lap, state, cfg, |_, _, s| {
        all_zero &= diversity(&s.theta) == 0.0;
    })?;
    Ok(all_zero)
}
