//! Experiment harness: data preparation, repeated solves with clustering
//! scores, parameter grids and component-count sweeps, plus their
//! JSON/CSV outputs.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{
    generate_three_gaussian, inject_block_occlusion, inject_noise_dims, load_csv,
    normalize_unit_columns, CsvOptions, DataMatrix, ImageShape, LabelColumn,
};
use crate::error::{FnmfError, Result};
use crate::fnmf::{self, SolveTrace, SolverConfig};
use crate::graph::{build_adaptive_knn_graph, laplacian, Laplacian, DEFAULT_NEIGHBORS};
use crate::metrics::{kmeans, ClusteringResult, DEFAULT_KMEANS_RESTARTS};
use crate::nmf::{self, NmfConfig, UpdateRule};

/// `{1e-3, 1e-2, ..., 1e3}`.
pub const DEFAULT_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        label_column: LabelColumn,
        has_header: bool,
    },
    /// The three-Gaussian toy set generated with this seed.
    Synthetic { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fnmf,
    Nmf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fnmf => "fnmf",
            Method::Nmf => "nmf",
        })
    }
}

/// Corruption applied to the raw data before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Appended uniform features; `count` defaults to a third of `d`.
    Dims { count: Option<usize>, seed: u64 },
    /// One square occlusion per image.
    Block {
        height: usize,
        width: usize,
        block: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub method: Method,
    pub solver: SolverConfig,
    pub k_neighbors: usize,
    pub repeats: usize,
    pub kmeans_restarts: usize,
    pub normalize: bool,
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
}

impl ExperimentSpec {
    /// Synthetic-data FNMF run with protocol defaults.
    pub fn synthetic(data_seed: u64, solver: SolverConfig) -> Self {
        ExperimentSpec {
            source: DataSource::Synthetic { seed: data_seed },
            method: Method::Fnmf,
            solver,
            k_neighbors: DEFAULT_NEIGHBORS,
            repeats: 20,
            kmeans_restarts: DEFAULT_KMEANS_RESTARTS,
            normalize: true,
            noise: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(FnmfError::domain("repeat count must be >= 1"));
        }
        if self.kmeans_restarts < 1 {
            return Err(FnmfError::domain("k-means restarts must be >= 1"));
        }
        self.solver.validate()
    }
}

/// Outcome of one repeat. Failed repeats carry the error message and no scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub seed: u64,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: Method,
    pub config: ExperimentSpec,
    pub repeats: Vec<RepeatOutcome>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub mean_iterations: f64,
    /// Not serialized into the result JSON so reruns compare byte-for-byte.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl ResultRecord {
    pub fn acc_values(&self) -> Vec<f64> {
        self.repeats.iter().filter_map(|r| r.acc).collect()
    }

    pub fn nmi_values(&self) -> Vec<f64> {
        self.repeats.iter().filter_map(|r| r.nmi).collect()
    }
}

/// Population mean and standard deviation; `(0, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Data after loading, corruption and normalization, with its graph.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub data: DataMatrix,
    pub laplacian: Laplacian,
}

impl PreparedData {
    pub fn labels(&self) -> &[usize] {
        self.data
            .labels()
            .expect("prepared data always carries labels")
    }
}

pub fn load_source(source: &DataSource) -> Result<DataMatrix> {
    match source {
        DataSource::Csv {
            path,
            label_column,
            has_header,
        } => load_csv(
            path,
            CsvOptions {
                label_column: *label_column,
                has_header: *has_header,
            },
        ),
        DataSource::Synthetic { seed } => Ok(generate_three_gaussian(*seed)),
    }
}

pub fn apply_noise(x: &DataMatrix, noise: &NoiseSpec) -> Result<DataMatrix> {
    match *noise {
        NoiseSpec::Dims { count, seed } => {
            let count = count.unwrap_or((x.n_features() / 3).max(1));
            inject_noise_dims(x, count, seed)
        }
        NoiseSpec::Block {
            height,
            width,
            block,
            seed,
        } => inject_block_occlusion(x, ImageShape::new(height, width)?, block, seed),
    }
}

pub fn prepare(spec: &ExperimentSpec) -> Result<PreparedData> {
    spec.validate()?;
    let mut data = load_source(&spec.source)?;
    if data.labels().is_none() {
        return Err(FnmfError::domain(
            "experiments need ground-truth labels (set a label column)",
        ));
    }
    for noise in &spec.noise {
        data = apply_noise(&data, noise)?;
    }
    if spec.normalize {
        data = normalize_unit_columns(&data);
    }
    let graph = build_adaptive_knn_graph(&data, spec.k_neighbors)?;
    Ok(PreparedData {
        laplacian: laplacian(&graph),
        data,
    })
}

/// A finished experiment: the record plus each repeat's convergence trace
/// (`None` for failed repeats).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub traces: Vec<Option<SolveTrace>>,
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    let prepared = prepare(spec)?;
    run_prepared(spec, &prepared)
}

/// Runs `spec.repeats` solves with seeds `seed, seed+1, ...` on already
/// prepared data. Repeats run in parallel; results keep repeat order.
pub fn run_prepared(spec: &ExperimentSpec, prepared: &PreparedData) -> Result<RunOutput> {
    spec.validate()?;
    let start = Instant::now();
    let results: Vec<(RepeatOutcome, Option<SolveTrace>)> = (0..spec.repeats)
        .into_par_iter()
        .map(|r| one_repeat(spec, prepared, spec.solver.seed.wrapping_add(r as u64)))
        .collect();
    let (repeats, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let accs: Vec<f64> = repeats.iter().filter_map(|r| r.acc).collect();
    let nmis: Vec<f64> = repeats.iter().filter_map(|r| r.nmi).collect();
    let (acc_mean, acc_std) = mean_std(&accs);
    let (nmi_mean, nmi_std) = mean_std(&nmis);
    let iters: Vec<f64> = repeats.iter().map(|r| r.iterations as f64).collect();
    let record = ResultRecord {
        method: spec.method,
        config: spec.clone(),
        acc_mean,
        acc_std,
        nmi_mean,
        nmi_std,
        mean_iterations: mean_std(&iters).0,
        repeats,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { record, traces })
}

fn one_repeat(
    spec: &ExperimentSpec,
    prepared: &PreparedData,
    seed: u64,
) -> (RepeatOutcome, Option<SolveTrace>) {
    match solve_and_score(spec, prepared, seed) {
        Ok((scores, trace)) => (
            RepeatOutcome {
                seed,
                acc: Some(scores.acc),
                nmi: Some(scores.nmi),
                iterations: trace.iters_run,
                converged: trace.converged,
                final_objective: Some(trace.final_objective()),
                error: None,
            },
            Some(trace),
        ),
        Err(e) => {
            log::warn!("repeat with seed {seed} failed: {e}");
            (
                RepeatOutcome {
                    seed,
                    acc: None,
                    nmi: None,
                    iterations: 0,
                    converged: false,
                    final_objective: None,
                    error: Some(e.to_string()),
                },
                None,
            )
        }
    }
}

fn solve_and_score(
    spec: &ExperimentSpec,
    prepared: &PreparedData,
    seed: u64,
) -> Result<(ClusteringResult, SolveTrace)> {
    let cfg = SolverConfig {
        seed,
        ..spec.solver.clone()
    };
    let x = &prepared.data;
    let (v, trace) = match spec.method {
        Method::Fnmf => {
            let state = fnmf::initialize(x, &cfg)?;
            let (state, trace) =
                fnmf::solve_from(x, &prepared.laplacian, state, &cfg, |_, _, _| {})?;
            (state.v, trace)
        }
        Method::Nmf => {
            let ncfg = NmfConfig {
                c: cfg.c,
                max_iters: cfg.max_iters,
                rel_tol: cfg.rel_tol,
                epsilon: cfg.epsilon,
                seed,
                rule: UpdateRule::LeeSeung,
            };
            let (f, trace) = nmf::nmf_solve(x, &ncfg)?;
            (f.v, trace)
        }
    };
    let clusters = kmeans(v.view(), cfg.c, spec.kmeans_restarts, seed)?;
    let scores = ClusteringResult::evaluate(clusters.assignments, prepared.labels())?;
    Ok((scores, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda: f64,
    pub beta: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    /// Cell with the highest mean accuracy (first one on ties, λ-major order).
    pub best: RunOutput,
    pub table: Vec<GridCell>,
}

/// Evaluates every `(lambda, beta)` pair on the same prepared data.
pub fn grid_search(spec: &ExperimentSpec, lambdas: &[f64], betas: &[f64]) -> Result<GridOutput> {
    let prepared = prepare(spec)?;
    grid_search_prepared(spec, &prepared, lambdas, betas)
}

pub fn grid_search_prepared(
    spec: &ExperimentSpec,
    prepared: &PreparedData,
    lambdas: &[f64],
    betas: &[f64],
) -> Result<GridOutput> {
    if lambdas.is_empty() || betas.is_empty() {
        return Err(FnmfError::domain("parameter grids must be non-empty"));
    }
    let mut best: Option<RunOutput> = None;
    let mut table = Vec::with_capacity(lambdas.len() * betas.len());
    for &lambda in lambdas {
        for &beta in betas {
            let cell_spec = ExperimentSpec {
                solver: SolverConfig {
                    lambda,
                    beta,
                    ..spec.solver.clone()
                },
                ..spec.clone()
            };
            let out = run_prepared(&cell_spec, prepared)?;
            let r = &out.record;
            table.push(GridCell {
                lambda,
                beta,
                acc_mean: r.acc_mean,
                acc_std: r.acc_std,
                nmi_mean: r.nmi_mean,
                nmi_std: r.nmi_std,
            });
            if best.as_ref().is_none_or(|b| r.acc_mean > b.record.acc_mean) {
                best = Some(out);
            }
        }
    }
    Ok(GridOutput {
        best: best.expect("non-empty grid"),
        table,
    })
}

/// One record per component count.
pub fn sweep_m(spec: &ExperimentSpec, m_values: &[usize]) -> Result<Vec<RunOutput>> {
    if m_values.is_empty() || m_values.contains(&0) {
        return Err(FnmfError::domain(
            "component counts must be non-empty and >= 1",
        ));
    }
    let prepared = prepare(spec)?;
    m_values
        .iter()
        .map(|&m| {
            let s = ExperimentSpec {
                solver: SolverConfig {
                    m,
                    ..spec.solver.clone()
                },
                ..spec.clone()
            };
            run_prepared(&s, &prepared)
        })
        .collect()
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| FnmfError::io(parent, e))?;
    }
    File::create(path).map_err(|e| FnmfError::io(path, e))
}

/// Convergence curve as `iteration,objective`, iterations from 1, values
/// printed in shortest round-trip form.
pub fn emit_curves(trace: &SolveTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iteration", "objective"])?;
    for (i, f) in trace.objective_per_iter.iter().enumerate() {
        w.write_record([(i + 1).to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| FnmfError::io(path, e))?;
    Ok(())
}

/// Trace with per-block wall times: `iteration,objective,<block>_secs...`.
pub fn write_trace_csv(trace: &SolveTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["iteration".to_string(), "objective".to_string()];
    header.extend(trace.block_names.iter().map(|b| format!("{b}_secs")));
    w.write_record(&header)?;
    for (i, (f, secs)) in trace
        .objective_per_iter
        .iter()
        .zip(&trace.block_seconds)
        .enumerate()
    {
        let mut row = vec![(i + 1).to_string(), f.to_string()];
        row.extend(secs.iter().map(|s| s.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| FnmfError::io(path, e))?;
    Ok(())
}

/// Writes a matrix as headerless CSV, one matrix row per line.
pub fn write_matrix_csv(matrix: &ndarray::Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    for row in matrix.outer_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| FnmfError::io(path, e))?;
    Ok(())
}

/// Exports U, V, theta and P as `u.csv`, `v.csv`, `theta.csv`, `p.csv`.
pub fn write_state(state: &fnmf::FnmfState, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_matrix_csv(&state.u, dir.join("u.csv"))?;
    write_matrix_csv(&state.v, dir.join("v.csv"))?;
    write_matrix_csv(&state.theta, dir.join("theta.csv"))?;
    write_matrix_csv(&state.p, dir.join("p.csv"))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| FnmfError::io(path, e))
}

#[derive(Debug, Serialize)]
struct Timing {
    wall_time_secs: f64,
    mean_iteration_secs: Vec<Option<f64>>,
}

/// `result.json`, `timing.json` and `curves/repeat_NNN.csv` under `dir`.
pub fn write_run_outputs(output: &RunOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_json(&output.record, dir.join("result.json"))?;
    let timing = Timing {
        wall_time_secs: output.record.wall_time_secs,
        mean_iteration_secs: output
            .traces
            .iter()
            .map(|t| t.as_ref().map(SolveTrace::mean_iteration_seconds))
            .collect(),
    };
    write_json(&timing, dir.join("timing.json"))?;
    for (r, trace) in output.traces.iter().enumerate() {
        if let Some(t) = trace {
            emit_curves(t, dir.join("curves").join(format!("repeat_{r:03}.csv")))?;
        }
    }
    Ok(())
}

/// `lambda,beta,acc_mean,acc_std,nmi_mean,nmi_std`, one row per cell.
pub fn write_grid_csv(table: &[GridCell], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    for cell in table {
        w.serialize(cell)?;
    }
    w.flush().map_err(|e| FnmfError::io(path, e))?;
    Ok(())
}

/// `m,acc_mean,acc_std,nmi_mean,nmi_std`, one row per record.
pub fn write_sweep_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["m", "acc_mean", "acc_std", "nmi_mean", "nmi_std"])?;
    for r in records {
        w.write_record([
            r.config.solver.m.to_string(),
            r.acc_mean.to_string(),
            r.acc_std.to_string(),
            r.nmi_mean.to_string(),
            r.nmi_std.to_string(),
        ])?;
    }
    w.flush().map_err(|e| FnmfError::io(path, e))?;
    Ok(())
}
