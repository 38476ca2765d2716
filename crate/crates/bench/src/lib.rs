//! Shared helpers for the benchmark targets.

use smu_core::{Point, TruthModel};

/// Deterministic exp-product sample for benchmarking.
pub fn sample(dim: usize, n: usize, seed: u64) -> Vec<Point> {
    TruthModel::ExpProduct { dim }
        .sample(n, seed)
        .expect("valid sample")
}
