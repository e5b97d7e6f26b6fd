//! End-to-end run: network, snake per noise level, grid fit per shift,
//! metrics and TOPSIS selection.

use std::path::Path;

use gridmap::geometry::{load_regions_with_boundary, simplify_boundary, Polygon, RegionSet};
use gridmap::gridfit::fit_grid;
use gridmap::network::{build_network, LinearNetwork};
use gridmap::quality::{
    gaussian_noise, metric_adjacency, metric_location, metric_orientation, metric_shape, Candidate,
    CandidateSet, LocationReference, QualityReport, Strategy,
};
use gridmap::snake::{grid_size, run_snake, IterationState};
use gridmap::{Error, Point};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{AtStage, Stage, StageError};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "GRIDMAP_THREADS";

/// Snake result for one (md, seed) pair.
#[derive(Debug, Clone)]
pub struct SnakeRun {
    pub md: f64,
    pub seed: u64,
    pub network: LinearNetwork,
    pub state: IterationState,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Input regions with the (possibly simplified) boundary.
    pub regions: RegionSet,
    /// Boundary as read or derived, before simplification.
    pub original_boundary: Polygon,
    pub grid_size: f64,
    /// Network before any transformation.
    pub network: LinearNetwork,
    pub runs: Vec<SnakeRun>,
    /// Index into `runs` for each candidate.
    pub run_of: Vec<usize>,
    pub candidates: CandidateSet,
}

impl PipelineResult {
    pub fn chosen(&self) -> &Candidate {
        self.candidates.chosen()
    }

    pub fn chosen_run(&self) -> &SnakeRun {
        &self.runs[self.run_of[self.candidates.chosen]]
    }

    pub fn region_ids(&self) -> Vec<&str> {
        self.regions.ids().collect()
    }
}

/// Reads regions (and an optional explicit boundary) from GeoJSON files.
pub fn load_input(input: &Path, boundary: Option<&Path>) -> Result<RegionSet, StageError> {
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|e| {
            StageError::input(Stage::Load, format!("cannot open {}: {e}", p.display()))
        })
    };
    let regions = std::io::BufReader::new(open(input)?);
    let boundary = boundary
        .map(|p| open(p).map(std::io::BufReader::new))
        .transpose()?;
    load_regions_with_boundary(regions, boundary).at(Stage::Load)
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool, StageError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| {
            StageError::input(
                Stage::Config,
                format!("{THREADS_ENV} must be a positive integer, got '{v}'"),
            )
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| StageError::input(Stage::Config, format!("cannot start worker threads: {e}")))
}

pub fn run_pipeline(
    regions: RegionSet,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, StageError> {
    cfg.validate()?;
    thread_pool()?.install(|| run_inner(regions, cfg))
}

fn run_inner(regions: RegionSet, cfg: &PipelineConfig) -> Result<PipelineResult, StageError> {
    let original_boundary = regions.boundary().clone();
    let regions = if cfg.simplify_tol > 0.0 {
        let simplified = simplify_boundary(regions.boundary(), cfg.simplify_tol);
        info!(
            "boundary simplified from {} to {} vertices",
            original_boundary.len(),
            simplified.len()
        );
        regions.with_boundary(simplified)
    } else {
        regions
    };
    let s = grid_size(regions.total_area(), regions.len()).at(Stage::Network)?;
    let network = build_network(&regions, None, s).at(Stage::Network)?;
    let snake_cfg = cfg.snake();

    let mut plans: Vec<(f64, u64)> = Vec::new();
    for &md in &cfg.md {
        if md == 0.0 {
            plans.push((md, cfg.seeds[0]));
        } else {
            plans.extend(cfg.seeds.iter().map(|&seed| (md, seed)));
        }
    }
    let runs: Vec<SnakeRun> = plans
        .par_iter()
        .map(|&(md, seed)| {
            let noisy = gaussian_noise(regions.centroids(), md, &network, seed).at(Stage::Snake)?;
            let start = if md == 0.0 {
                network.clone()
            } else {
                build_network(&regions, Some(&noisy), s).at(Stage::Network)?
            };
            let (net, state) = run_snake(&start, &regions, &snake_cfg).at(Stage::Snake)?;
            info!(
                "md {md} seed {seed}: snake stopped after {} steps ({:?})",
                state.steps, state.stop
            );
            Ok(SnakeRun {
                md,
                seed,
                network: net,
                state,
            })
        })
        .collect::<Result<_, StageError>>()?;

    let jobs: Vec<(usize, [f64; 2])> = (0..runs.len())
        .flat_map(|r| cfg.shifts.iter().map(move |&shift| (r, shift)))
        .collect();
    let fitted: Vec<Option<(usize, Candidate)>> = jobs
        .par_iter()
        .map(|&(r, shift)| {
            let run = &runs[r];
            let strategy = Strategy {
                shift,
                md: run.md,
                seed: run.seed,
            };
            match evaluate(&regions, &original_boundary, run, s, strategy, cfg) {
                Ok(c) => Ok(Some((r, c))),
                Err(e)
                    if matches!(
                        e.cause,
                        crate::error::Cause::Core(Error::InfeasibleGrid { .. })
                    ) =>
                {
                    warn!("skipping candidate {strategy:?}: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, StageError>>()?;
    let (run_of, candidates): (Vec<usize>, Vec<Candidate>) = fitted.into_iter().flatten().unzip();
    if candidates.is_empty() {
        return Err(StageError::new(
            Stage::Grid,
            Error::InfeasibleGrid {
                needed: regions.len(),
                available: 0,
            },
        ));
    }
    let candidates = CandidateSet::new(candidates, cfg.topsis_weights).at(Stage::Quality)?;
    Ok(PipelineResult {
        regions,
        original_boundary,
        grid_size: s,
        network,
        runs,
        run_of,
        candidates,
    })
}

fn evaluate(
    regions: &RegionSet,
    original_boundary: &Polygon,
    run: &SnakeRun,
    s: f64,
    strategy: Strategy,
    cfg: &PipelineConfig,
) -> Result<Candidate, StageError> {
    let boundary = Polygon::new(run.network.boundary_ring()).at(Stage::Grid)?;
    let centroids: Vec<Point> = run.network.centroid_positions();
    let layout = fit_grid(&boundary, &centroids, s, strategy.shift).at(Stage::Grid)?;
    let reference = match cfg.location_reference {
        LocationReference::Transformed => &centroids[..],
        LocationReference::Original => regions.centroids(),
    };
    let report = QualityReport {
        c_location: metric_location(reference, &layout),
        c_adjacent: metric_adjacency(regions, &layout, cfg.adjacency),
        c_orientation: metric_orientation(regions, &run.network, &layout),
        c_shape: metric_shape(original_boundary, &layout.outline, &cfg.shape).at(Stage::Quality)?,
    };
    Ok(Candidate {
        strategy,
        centroids,
        layout,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridmap::synthetic::tiling;

    #[test]
    fn identity_tiling_is_chosen_exactly() {
        let rs = RegionSet::new(tiling(2, 2), None).unwrap();
        let result = run_pipeline(rs, &PipelineConfig::default()).unwrap();
        assert_eq!(result.candidates.candidates.len(), 12);
        let baseline = &result.candidates.candidates[0];
        assert_eq!(baseline.strategy.shift, [0.0, 0.0]);
        assert_eq!(baseline.report.c_adjacent, 1.0);
        assert!(baseline.report.c_location < 1e-9);
    }
}
