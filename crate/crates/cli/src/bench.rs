//! Efficiency harness: one full pipeline run per boundary simplification
//! tolerance, reporting network node counts and wall time.

use std::path::Path;
use std::time::Instant;

use gridmap::RegionSet;
use serde::Serialize;

use crate::artifacts::write_atomic;
use crate::config::PipelineConfig;
use crate::error::{AtStage, Stage, StageError};
use crate::pipeline::{load_input, run_pipeline};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub simplify_tol: f64,
    /// Centroid nodes in the network.
    pub n_region: usize,
    /// Boundary nodes in the network.
    pub n_boundary: usize,
    pub n_sum: usize,
    pub n_ratio: f64,
    pub wall_time_s: f64,
}

/// Runs the pipeline `repeats` times per tolerance, in the given order, and
/// reports the fastest wall time.
pub fn bench_regions(
    regions: &RegionSet,
    tols: &[f64],
    base: &PipelineConfig,
    repeats: usize,
) -> Result<Vec<BenchRow>, StageError> {
    if tols.is_empty() {
        return Err(StageError::input(Stage::Bench, "tolerance list is empty"));
    }
    if repeats == 0 {
        return Err(StageError::input(
            Stage::Bench,
            "repeat count must be at least 1",
        ));
    }
    tols.iter()
        .map(|&tol| {
            let cfg = PipelineConfig {
                simplify_tol: tol,
                ..base.clone()
            };
            let mut wall = f64::INFINITY;
            let mut result = None;
            for _ in 0..repeats {
                let start = Instant::now();
                let run = run_pipeline(regions.clone(), &cfg)?;
                wall = wall.min(start.elapsed().as_secs_f64());
                result = Some(run);
            }
            let result = result.expect("at least one repeat");
            let n_region = result.network.num_centroids();
            let n_boundary = result.network.num_boundary();
            log::info!("tol {tol}: {n_region} + {n_boundary} nodes in {wall:.3} s");
            Ok(BenchRow {
                simplify_tol: tol,
                n_region,
                n_boundary,
                n_sum: n_region + n_boundary,
                n_ratio: n_region as f64 / n_boundary as f64,
                wall_time_s: wall,
            })
        })
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<Vec<u8>, StageError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| StageError::input(Stage::Bench, format!("cannot write CSV: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| StageError::new(Stage::Bench, e.into_error()))
}

/// Parses a comma-separated tolerance list such as `0,0.05,0.1`.
pub fn parse_tols(text: &str) -> Result<Vec<f64>, StageError> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| {
                StageError::input(Stage::Bench, format!("invalid tolerance '{}'", t.trim()))
            })?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(StageError::input(
                    Stage::Bench,
                    format!("tolerance must be finite and >= 0, got {v}"),
                ))
            }
        })
        .collect()
}

/// Loads `input`, benchmarks every tolerance and writes the CSV to `out`.
pub fn cmd_bench(
    input: &Path,
    tols: &[f64],
    repeats: usize,
    config: Option<&Path>,
    out: &Path,
) -> Result<Vec<BenchRow>, StageError> {
    let cfg = match config {
        Some(p) => PipelineConfig::from_path(p)?,
        None => PipelineConfig::default(),
    };
    let regions = load_input(input, None)?;
    let rows = bench_regions(&regions, tols, &cfg, repeats)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(Stage::Output)?;
    }
    write_atomic(out, &bench_csv(&rows)?)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_list_parsing() {
        assert_eq!(parse_tols("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_tols("0,x").is_err());
        assert!(parse_tols("-1").is_err());
    }
}
