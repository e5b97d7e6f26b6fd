//! Shared fixtures for the criterion benchmarks.

use gridmap::synthetic::wiggly_tiling;
use gridmap::RegionSet;

/// A `k × k` tiling with roughly `4·k·detail` boundary vertices.
pub fn wiggly_map(k: usize, detail: usize) -> RegionSet {
    RegionSet::new(wiggly_tiling(k, detail), None).expect("synthetic map is valid")
}

/// Deterministic dense cost matrix with distinct entries.
pub fn cost_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| ((r * 7919 + c * 104_729) % 1009) as f64)
                .collect()
        })
        .collect()
}
