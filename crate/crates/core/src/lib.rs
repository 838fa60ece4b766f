//! Feature-weighted non-negative matrix factorization for clustering.
//!
//! A sample `x_i` is explained by `m` feature-weighting components
//! `theta_j` (rows of a simplex-constrained matrix) mixed with
//! per-sample probabilities `p_ij`, plus a low-rank factorization
//! `U V^T` regularized by an adaptive kNN graph. Clustering the rows of
//! `V` with k-means gives the final partition.
//!
//! ```no_run
//! use fnmf_core::{build_adaptive_knn_graph, generate_three_gaussian, solve, SolverConfig};
//!
//! let x = fnmf_core::normalize_unit_columns(&generate_three_gaussian(7));
//! let graph = build_adaptive_knn_graph(&x, 5).unwrap();
//! let cfg = SolverConfig { c: 3, ..SolverConfig::default() };
//! let (state, trace) = solve(&x, &graph, &cfg).unwrap();
//! println!("{} iterations, V is {:?}", trace.iters_run, state.v.dim());
//! ```

pub mod datasets;
pub mod error;
pub mod experiment;
pub mod fnmf;
pub mod graph;
pub mod metrics;
pub mod nmf;
pub mod simplex;

pub use datasets::{
    generate_three_gaussian, generate_three_gaussian_sized, inject_block_occlusion,
    inject_noise_dims, load_csv, normalize_unit_columns, read_csv, write_csv, CsvOptions,
    DataMatrix, ImageShape, LabelColumn,
};
pub use error::{FnmfError, Result};
pub use experiment::{
    emit_curves, grid_search, run, sweep_m, DataSource, ExperimentSpec, Method, NoiseSpec,
    ResultRecord, RunOutput,
};
pub use fnmf::{
    initialize, objective, solve, solve_from, Block, FnmfState, PMode, SolveTrace, SolverConfig,
};
pub use graph::{build_adaptive_knn_graph, laplacian, Laplacian, SimilarityGraph};
pub use metrics::{accuracy, kmeans, nmi, ClusteringResult};
pub use nmf::{nmf_solve, NmfConfig, NmfFactors, UpdateRule};
pub use simplex::{solve as solve_simplex_qp, SeparableSimplexQP, SimplexPoint};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
