//! Grid map generation: turns a set of polygon regions into a layout of equal
//! square cells that keeps the regions' relative positions, adjacencies and
//! the overall outline.
//!
//! The pipeline is: build a linear network from region centroids and the
//! outer boundary ([`network`]), even out centroid spacing with a snake
//! displacement ([`snake`]), fit a square grid and assign regions to cells
//! ([`gridfit`]), then score and pick among candidate layouts ([`quality`]).

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod gridfit;
pub mod network;
pub mod quality;
pub mod snake;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{Point, Polygon, Region, RegionSet};
pub use gridfit::{GridLayout, LayoutJson};
pub use network::LinearNetwork;
pub use quality::{AdjacencyMode, CandidateSet, QualityReport, ShapeParams, Strategy};
pub use snake::{IterationState, Length, SnakeConfig, StopReason};
