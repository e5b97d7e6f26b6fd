//! Pipeline configuration, read from a JSON document with every field
//! optional and unknown keys rejected.

use std::path::Path;

use gridmap::quality::{candidate_origins, AdjacencyMode, LocationReference, ShapeParams};
use gridmap::snake::{Length, SnakeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Stage, StageError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub beta: f64,
    pub t_f: Length,
    pub epsilon: Length,
    pub t_s: usize,
    pub lambda: f64,
    pub damping: f64,
    pub stiffness_schedule: Vec<[f64; 2]>,
    pub rebuild_network: bool,
    /// Douglas-Peucker tolerance for the outer boundary, in input units;
    /// 0 keeps every vertex.
    pub simplify_tol: f64,
    /// Grid origin shifts as fractions of the cell size.
    pub shifts: Vec<[f64; 2]>,
    /// Noise levels relative to each centroid's mean neighbour distance.
    pub md: Vec<f64>,
    /// Noise seeds; a noise-free level runs once regardless.
    pub seeds: Vec<u64>,
    /// TOPSIS weights for location, adjacency, orientation and shape.
    pub topsis_weights: [f64; 4],
    pub adjacency: AdjacencyMode,
    pub location_reference: LocationReference,
    pub shape: ShapeParams,
    pub outputs: OutputToggles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputToggles {
    pub svg: bool,
    pub json: bool,
    pub csv: bool,
    pub trace: bool,
}

impl Default for OutputToggles {
    fn default() -> Self {
        OutputToggles {
            svg: true,
            json: true,
            csv: true,
            trace: false,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let snake = SnakeConfig::default();
        PipelineConfig {
            alpha: snake.alpha,
            beta: snake.beta,
            t_f: snake.t_f,
            epsilon: snake.epsilon,
            t_s: snake.t_s,
            lambda: snake.lambda,
            damping: snake.damping,
            stiffness_schedule: snake.stiffness_schedule,
            rebuild_network: snake.rebuild_network,
            simplify_tol: 0.0,
            shifts: candidate_origins(),
            md: vec![0.0, 0.02, 0.04],
            seeds: vec![0],
            topsis_weights: [0.25; 4],
            adjacency: AdjacencyMode::Rook,
            location_reference: LocationReference::Transformed,
            shape: ShapeParams::default(),
            outputs: OutputToggles::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, StageError> {
        let cfg: PipelineConfig = serde_json::from_str(text)
            .map_err(|e| StageError::input(Stage::Config, format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, StageError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            StageError::input(
                Stage::Config,
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        Self::from_json(&text)
    }

    pub fn snake(&self) -> SnakeConfig {
        SnakeConfig {
            alpha: self.alpha,
            beta: self.beta,
            t_f: self.t_f,
            epsilon: self.epsilon,
            t_s: self.t_s,
            lambda: self.lambda,
            damping: self.damping,
            stiffness_schedule: self.stiffness_schedule.clone(),
            rebuild_network: self.rebuild_network,
        }
    }

    pub fn validate(&self) -> Result<(), StageError> {
        let bad = |msg: String| Err(StageError::input(Stage::Config, msg));
        self.snake()
            .validate()
            .map_err(|e| StageError::new(Stage::Config, e))?;
        self.shape
            .validate()
            .map_err(|e| StageError::new(Stage::Config, e))?;
        if !(self.simplify_tol >= 0.0) || !self.simplify_tol.is_finite() {
            return bad(format!(
                "simplify_tol must be finite and >= 0, got {}",
                self.simplify_tol
            ));
        }
        if self.shifts.is_empty() || self.md.is_empty() || self.seeds.is_empty() {
            return bad("shifts, md and seeds must each list at least one value".into());
        }
        if self.shifts.iter().flatten().any(|v| !v.is_finite()) {
            return bad("shifts must be finite".into());
        }
        if self.md.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return bad("md values must be finite and >= 0".into());
        }
        let w = &self.topsis_weights;
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
            return bad(format!(
                "topsis_weights must be >= 0 with a positive sum, got {w:?}"
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.alpha, 100_000.0);
        assert_eq!(cfg.t_s, 30);
        assert_eq!(cfg.lambda, 1e-8);
        assert_eq!(cfg.md, vec![0.0, 0.02, 0.04]);
        assert_eq!(cfg.shifts.len(), 4);
    }

    #[test]
    fn overrides_and_rejections() {
        let cfg = PipelineConfig::from_json(
            r#"{"t_s": 5, "t_f": {"absolute": 2.5}, "md": [0.0], "adjacency": "queen"}"#,
        )
        .unwrap();
        assert_eq!(cfg.t_s, 5);
        assert_eq!(cfg.t_f, Length::Absolute(2.5));
        assert_eq!(cfg.adjacency, AdjacencyMode::Queen);
        assert!(PipelineConfig::from_json(r#"{"alpah": 1}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"outputs": {"pdf": true}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"lambda": 0}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"md": []}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"topsis_weights": [0, 0, 0, 0]}"#).is_err());
        assert!(PipelineConfig::from_json("[").is_err());
    }
}
