//! Pipeline orchestration, configuration, output files, SVG rendering and
//! the efficiency benchmark behind the `gridmap` command.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod bench;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;

pub use artifacts::{cmd_generate, GenerateArgs};
pub use bench::{cmd_bench, BenchRow};
pub use config::PipelineConfig;
pub use error::{Stage, StageError};
pub use pipeline::{run_pipeline, PipelineResult};

use std::path::Path;

use error::AtStage;
use gridmap::LayoutJson;

/// Renders a layout JSON file to a standalone SVG.
pub fn cmd_render(layout: &Path, out: &Path) -> Result<(), StageError> {
    let text = std::fs::read_to_string(layout).map_err(|e| {
        StageError::input(
            Stage::Load,
            format!("cannot read {}: {e}", layout.display()),
        )
    })?;
    let layout: LayoutJson = serde_json::from_str(&text)
        .map_err(|e| StageError::input(Stage::Load, format!("invalid layout JSON: {e}")))?;
    if !(layout.s > 0.0) || !layout.s.is_finite() {
        return Err(StageError::input(
            Stage::Load,
            "layout cell size must be positive",
        ));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(Stage::Render)?;
    }
    artifacts::write_atomic(out, render::render_layout(&layout).as_bytes())
}
