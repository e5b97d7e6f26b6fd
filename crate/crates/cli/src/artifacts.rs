//! Output files for a pipeline run. Every file is written to a temporary
//! sibling and renamed into place, so readers never see a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use gridmap::gridfit::LayoutJson;
use gridmap::snake::IterationState;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{AtStage, Stage, StageError};
use crate::pipeline::{load_input, run_pipeline, PipelineResult};
use crate::render::{render_layout, render_network, render_regions};

pub const LAYOUT_FILE: &str = "layout.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const ORIGINAL_SVG: &str = "original.svg";
pub const NETWORK_SVG: &str = "network.svg";
pub const GRID_SVG: &str = "grid.svg";

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StageError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).at(Stage::Output)?;
    tmp.write_all(bytes).at(Stage::Output)?;
    tmp.as_file().sync_all().at(Stage::Output)?;
    tmp.persist(path)
        .map_err(|e| StageError::new(Stage::Output, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, StageError> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| StageError::input(Stage::Output, format!("cannot serialize JSON: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, StageError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| StageError::input(Stage::Output, format!("cannot write CSV: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| StageError::new(Stage::Output, e.into_error()))
}

#[derive(Debug, Serialize)]
pub struct MetricsRow {
    pub shift_x: f64,
    pub shift_y: f64,
    pub md: f64,
    pub seed: u64,
    pub c_location: f64,
    pub c_adjacent: f64,
    pub c_orientation: f64,
    pub c_shape: f64,
    pub topsis_closeness: f64,
    pub chosen: bool,
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub f_max: f64,
    pub max_displacement: f64,
    /// Filled on the last row only.
    pub stop_reason: String,
}

pub fn metrics_rows(result: &PipelineResult) -> Vec<MetricsRow> {
    let set = &result.candidates;
    set.candidates
        .iter()
        .zip(&set.closeness)
        .enumerate()
        .map(|(i, (c, &closeness))| MetricsRow {
            shift_x: c.strategy.shift[0],
            shift_y: c.strategy.shift[1],
            md: c.strategy.md,
            seed: c.strategy.seed,
            c_location: c.report.c_location,
            c_adjacent: c.report.c_adjacent,
            c_orientation: c.report.c_orientation,
            c_shape: c.report.c_shape,
            topsis_closeness: closeness,
            chosen: i == set.chosen,
        })
        .collect()
}

pub fn trace_rows(state: &IterationState) -> Vec<TraceRow> {
    let reason = serde_json::to_value(state.stop)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let mut rows: Vec<TraceRow> = state
        .trace
        .iter()
        .map(|r| TraceRow {
            step: r.step,
            f_max: r.f_max,
            max_displacement: r.max_displacement,
            stop_reason: String::new(),
        })
        .collect();
    match rows.last_mut() {
        Some(last) => last.stop_reason = reason,
        None => rows.push(TraceRow {
            step: 0,
            f_max: 0.0,
            max_displacement: 0.0,
            stop_reason: reason,
        }),
    }
    rows
}

pub fn layout_json(result: &PipelineResult) -> LayoutJson {
    result.chosen().layout.to_json(&result.region_ids())
}

/// Files produced by [`write_outputs`], in write order.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

pub fn write_outputs(
    result: &PipelineResult,
    cfg: &PipelineConfig,
    out: &Path,
    trace: bool,
) -> Result<Written, StageError> {
    std::fs::create_dir_all(out).at(Stage::Output)?;
    let mut written = Written::default();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), StageError> {
        let path = out.join(name);
        write_atomic(&path, &bytes)?;
        written.files.push(path);
        Ok(())
    };
    if cfg.outputs.json {
        put(LAYOUT_FILE, json_bytes(&layout_json(result))?)?;
    }
    if cfg.outputs.csv {
        put(METRICS_FILE, csv_bytes(metrics_rows(result))?)?;
    }
    if trace || cfg.outputs.trace {
        put(
            TRACE_FILE,
            csv_bytes(trace_rows(&result.chosen_run().state))?,
        )?;
    }
    if cfg.outputs.svg {
        put(ORIGINAL_SVG, render_regions(&result.regions).into_bytes())?;
        let extent = result.regions.bbox();
        put(
            NETWORK_SVG,
            render_network(&result.chosen_run().network, Some(extent)).into_bytes(),
        )?;
        put(GRID_SVG, render_layout(&layout_json(result)).into_bytes())?;
    }
    Ok(written)
}

/// Arguments of the `generate` command.
#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub input: PathBuf,
    pub boundary: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub trace: bool,
}

/// Loads the input, runs the pipeline and writes every enabled output.
pub fn cmd_generate(args: &GenerateArgs) -> Result<(PipelineResult, Written), StageError> {
    let cfg = match &args.config {
        Some(p) => PipelineConfig::from_path(p)?,
        None => PipelineConfig::default(),
    };
    let regions = load_input(&args.input, args.boundary.as_deref())?;
    let result = run_pipeline(regions, &cfg)?;
    let written = write_outputs(&result, &cfg, &args.out, args.trace)?;
    Ok((result, written))
}
