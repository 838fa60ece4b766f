//! Fixtures shared by the benchmarks.

use fnmf_core::simplex::SeparableSimplexQP;
use fnmf_core::{
    build_adaptive_knn_graph, generate_three_gaussian_sized, laplacian, normalize_unit_columns,
    DataMatrix, Laplacian,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalized three-Gaussian data with `3 * per_class` samples and its K=5 graph.
pub fn synthetic_problem(per_class: usize) -> (DataMatrix, Laplacian) {
    let x = normalize_unit_columns(&generate_three_gaussian_sized(per_class, 0));
    let graph = build_adaptive_knn_graph(&x, 5).expect("enough samples for K=5");
    let lap = laplacian(&graph);
    (x, lap)
}

pub fn random_qps(d: usize, count: usize, seed: u64) -> Vec<SeparableSimplexQP> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = (0..d).map(|_| rng.random_range(0.01..2.0)).collect();
            let b = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            SeparableSimplexQP::new(a, b).expect("valid coefficients")
        })
        .collect()
}
