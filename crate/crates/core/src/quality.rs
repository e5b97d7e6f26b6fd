//! Layout quality metrics, candidate strategies and TOPSIS selection.

use std::f64::consts::TAU;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compute_centroid, ring_contains, Point, Polygon, RegionSet};
use crate::gridfit::{GridCell, GridLayout};
use crate::network::LinearNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Mean centroid-to-cell-centre distance (cost).
    pub c_location: f64,
    /// Fraction of region adjacencies kept as lattice adjacencies (benefit).
    pub c_adjacent: f64,
    /// Mean link direction change in degrees (cost).
    pub c_orientation: f64,
    /// Outline similarity in [0, 1] (benefit).
    pub c_shape: f64,
}

impl QualityReport {
    fn as_array(&self) -> [f64; 4] {
        [
            self.c_location,
            self.c_adjacent,
            self.c_orientation,
            self.c_shape,
        ]
    }

    /// True if `self` is at least as good on every metric and strictly better
    /// on one.
    pub fn dominates(&self, other: &QualityReport) -> bool {
        let a = self.as_array();
        let b = other.as_array();
        let mut strict = false;
        for k in 0..4 {
            let (x, y) = if BENEFIT[k] {
                (a[k], b[k])
            } else {
                (b[k], a[k])
            };
            if x < y {
                return false;
            }
            strict |= x > y;
        }
        strict
    }
}

/// Benefit (true) or cost (false) direction of each report column.
const BENEFIT: [bool; 4] = [false, true, false, true];

/// Which lattice neighbours count as adjacent for `c_adjacent`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMode {
    /// Shared cell edge.
    #[default]
    Rook,
    /// Shared cell edge or corner.
    Queen,
}

impl AdjacencyMode {
    pub fn adjacent(self, a: &GridCell, b: &GridCell) -> bool {
        let (dr, dc) = ((a.row - b.row).abs(), (a.col - b.col).abs());
        match self {
            AdjacencyMode::Rook => dr + dc == 1,
            AdjacencyMode::Queen => dr.max(dc) == 1,
        }
    }
}

/// Centroid set `c_location` is measured from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationReference {
    /// Centroids after the snake transformation.
    #[default]
    Transformed,
    /// Centroids of the input regions.
    Original,
}

/// Mean distance from each centroid to the centre of its assigned cell.
pub fn metric_location(centroids: &[Point], layout: &GridLayout) -> f64 {
    if centroids.is_empty() {
        return 0.0;
    }
    let total: f64 = centroids
        .iter()
        .enumerate()
        .map(|(m, c)| c.dist(layout.cell_for(m).center))
        .sum();
    total / centroids.len() as f64
}

/// Share of adjacent region pairs whose cells are lattice neighbours; 1 when
/// there are no adjacent pairs.
pub fn metric_adjacency(rs: &RegionSet, layout: &GridLayout, mode: AdjacencyMode) -> f64 {
    let pairs = rs.adjacency();
    if pairs.is_empty() {
        return 1.0;
    }
    let kept = pairs
        .iter()
        .filter(|&&(a, b)| mode.adjacent(layout.cell_for(a), layout.cell_for(b)))
        .count();
    kept as f64 / pairs.len() as f64
}

/// Mean absolute angle, in degrees within [0, 180], between each network
/// centroid link in the input map and the same link between assigned cells.
pub fn metric_orientation(rs: &RegionSet, net: &LinearNetwork, layout: &GridLayout) -> f64 {
    let links = net.centroid_links();
    if links.is_empty() {
        return 0.0;
    }
    let centroids = rs.centroids();
    let total: f64 = links
        .iter()
        .map(|&(a, b)| {
            let before = centroids[b] - centroids[a];
            let after = layout.cell_for(b).center - layout.cell_for(a).center;
            if after.norm() == 0.0 || before.norm() == 0.0 {
                warn!("link {a}-{b} has zero length; it contributes no angle");
                return 0.0;
            }
            angle_difference(before, after)
        })
        .sum();
    total / links.len() as f64
}

/// Absolute difference of direction angles in degrees, wrapped to [0, 180].
pub fn angle_difference(u: Point, v: Point) -> f64 {
    let d = (v.y.atan2(v.x) - u.y.atan2(u.x))
        .to_degrees()
        .rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Sampling parameters for [`metric_shape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeParams {
    pub samples: usize,
    pub harmonics: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            samples: 256,
            harmonics: 32,
        }
    }
}

impl ShapeParams {
    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 || self.samples < 2 * self.harmonics + 1 {
            return Err(Error::Validation(format!(
                "shape metric needs harmonics >= 1 and samples > 2 * harmonics (got {} samples, {} harmonics)",
                self.samples, self.harmonics
            )));
        }
        Ok(())
    }
}

/// Fourier-descriptor similarity `1 - ‖F_a - F_b‖ / 2` of two outlines.
///
/// Each outline is resampled at equal arc length, described by the distance
/// of each sample from its area centroid, and reduced to the magnitudes of
/// harmonics `1..=harmonics` scaled to unit L2 norm. A constant signature (a
/// circle) has the zero spectrum.
pub fn metric_shape(a: &Polygon, b: &Polygon, params: &ShapeParams) -> Result<f64> {
    params.validate()?;
    let fa = fourier_descriptor(a, params)?;
    let fb = fourier_descriptor(b, params)?;
    let dist = fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok((1.0 - dist / 2.0).clamp(0.0, 1.0))
}

/// Unit-norm harmonic magnitudes of the centroid-distance signature.
pub fn fourier_descriptor(p: &Polygon, params: &ShapeParams) -> Result<Vec<f64>> {
    let centre = compute_centroid(p)?;
    let signature: Vec<f64> = resample(p, params.samples)?
        .into_iter()
        .map(|q| q.dist(centre))
        .collect();
    let n = signature.len();
    let mean = signature.iter().sum::<f64>() / n as f64;
    let mut spectrum: Vec<f64> = (1..=params.harmonics)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, r) in signature.iter().enumerate() {
                let phase = TAU * ((k * i) % n) as f64 / n as f64;
                re += r * phase.cos();
                im -= r * phase.sin();
            }
            re.hypot(im)
        })
        .collect();
    let norm = spectrum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-12 * mean * n as f64 {
        spectrum.iter_mut().for_each(|x| *x = 0.0);
    } else {
        spectrum.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(spectrum)
}

/// `count` points at equal arc-length spacing along the counter-clockwise
/// ring, starting at its first vertex.
fn resample(p: &Polygon, count: usize) -> Result<Vec<Point>> {
    let ring = p.to_ccw().into_ring();
    let perimeter = p.perimeter();
    if !(perimeter > 0.0) || !perimeter.is_finite() {
        return Err(Error::DegenerateGeometry(
            "outline has zero perimeter".into(),
        ));
    }
    let step = perimeter / count as f64;
    let n = ring.len();
    let mut out = Vec::with_capacity(count);
    let mut edge = 0usize;
    let mut edge_start = 0.0;
    for k in 0..count {
        let target = k as f64 * step;
        loop {
            let len = ring[edge].dist(ring[(edge + 1) % n]);
            if target <= edge_start + len || edge + 1 == n {
                let t = if len > 0.0 {
                    ((target - edge_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (a, b) = (ring[edge], ring[(edge + 1) % n]);
                out.push(a + (b - a) * t);
                break;
            }
            edge_start += len;
            edge += 1;
        }
    }
    Ok(out)
}

/// Displaces each centroid by an isotropic Gaussian sample whose per-axis
/// standard deviation is `md` times the centroid's mean distance to its
/// network neighbours. Samples that leave the network boundary are discarded
/// and the centroid keeps its position.
pub fn gaussian_noise(
    centroids: &[Point],
    md: f64,
    net: &LinearNetwork,
    seed: u64,
) -> Result<Vec<Point>> {
    if !(md >= 0.0) || !md.is_finite() {
        return Err(Error::Validation(format!(
            "noise level must be non-negative, got {md}"
        )));
    }
    if md == 0.0 {
        return Ok(centroids.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let ring = net.boundary_ring();
    let nodes = net.nodes();
    centroids
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let neighbors = net.neighbors(i)?;
            let mean = if neighbors.is_empty() {
                0.0
            } else {
                neighbors.iter().map(|&j| c.dist(nodes[j].pos)).sum::<f64>()
                    / neighbors.len() as f64
            };
            let sd = md * mean;
            let offset = Point::new(unit.sample(&mut rng), unit.sample(&mut rng)) * sd;
            let moved = c + offset;
            if ring_contains(&ring, moved) {
                Ok(moved)
            } else {
                warn!("noise moved centroid {i} outside the boundary; keeping it in place");
                Ok(c)
            }
        })
        .collect()
}

/// Origin shifts, as fractions of the grid size, tried for every layout.
pub fn candidate_origins() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]]
}

/// TOPSIS ranking over the four metrics.
///
/// Returns the index with the highest closeness (lowest index on ties) and
/// every closeness value. Columns are vector-normalized; a column of zeros or
/// identical values contributes nothing to the separations.
pub fn topsis_select(reports: &[QualityReport], weights: [f64; 4]) -> Result<(usize, Vec<f64>)> {
    if reports.is_empty() {
        return Err(Error::Validation(
            "TOPSIS needs at least one candidate".into(),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0
    {
        return Err(Error::Validation(format!(
            "TOPSIS weights must be non-negative with a positive sum, got {weights:?}"
        )));
    }
    if reports.len() == 1 {
        return Ok((0, vec![1.0]));
    }
    let rows: Vec<[f64; 4]> = reports.iter().map(QualityReport::as_array).collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "non-finite metric value in TOPSIS input".into(),
        ));
    }
    let mut weighted = rows.clone();
    for k in 0..4 {
        let norm = rows.iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
        for row in weighted.iter_mut() {
            row[k] = if norm > 0.0 {
                weights[k] * row[k] / norm
            } else {
                0.0
            };
        }
    }
    let mut ideal = [0.0; 4];
    let mut anti = [0.0; 4];
    for k in 0..4 {
        let hi = weighted
            .iter()
            .map(|r| r[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = weighted.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        (ideal[k], anti[k]) = if BENEFIT[k] { (hi, lo) } else { (lo, hi) };
    }
    let closeness: Vec<f64> = weighted
        .iter()
        .map(|row| {
            let sep = |target: &[f64; 4]| {
                row.iter()
                    .zip(target)
                    .map(|(v, t)| (v - t) * (v - t))
                    .sum::<f64>()
                    .sqrt()
            };
            let (d_plus, d_minus) = (sep(&ideal), sep(&anti));
            if d_plus + d_minus == 0.0 {
                1.0
            } else {
                d_minus / (d_plus + d_minus)
            }
        })
        .collect();
    let mut best = 0;
    for (i, &c) in closeness.iter().enumerate() {
        if c > closeness[best] {
            best = i;
        }
    }
    Ok((best, closeness))
}

/// Parameters of one candidate layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub shift: [f64; 2],
    pub md: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub strategy: Strategy,
    /// Centroids after the snake transformation.
    pub centroids: Vec<Point>,
    pub layout: GridLayout,
    pub report: QualityReport,
}

#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub closeness: Vec<f64>,
    pub chosen: usize,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>, weights: [f64; 4]) -> Result<Self> {
        let reports: Vec<QualityReport> = candidates.iter().map(|c| c.report).collect();
        let (chosen, closeness) = topsis_select(&reports, weights)?;
        Ok(CandidateSet {
            candidates,
            closeness,
            chosen,
        })
    }

    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.chosen]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::gridfit::fit_grid;
    use crate::network::build_network;
    use approx::assert_relative_eq;

    fn report(l: f64, a: f64, o: f64, s: f64) -> QualityReport {
        QualityReport {
            c_location: l,
            c_adjacent: a,
            c_orientation: o,
            c_shape: s,
        }
    }

    #[test]
    fn angle_wrapping() {
        let dir = |deg: f64| Point::new(deg.to_radians().cos(), deg.to_radians().sin());
        assert_relative_eq!(
            angle_difference(dir(10.0), dir(350.0)),
            20.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(angle_difference(dir(0.0), dir(90.0)), 90.0, epsilon = 1e-9);
        assert_relative_eq!(
            angle_difference(dir(0.0), dir(180.0)),
            180.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(angle_difference(dir(45.0), dir(45.0)), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn lattice_adjacency_modes() {
        let c = |row, col| GridCell {
            row,
            col,
            center: Point::ORIGIN,
            score: 0.0,
        };
        assert!(AdjacencyMode::Rook.adjacent(&c(0, 0), &c(0, 1)));
        assert!(!AdjacencyMode::Rook.adjacent(&c(0, 0), &c(1, 1)));
        assert!(AdjacencyMode::Queen.adjacent(&c(0, 0), &c(1, 1)));
        assert!(!AdjacencyMode::Queen.adjacent(&c(0, 0), &c(0, 0)));
    }

    #[test]
    fn identity_tiling_metrics() {
        let rs = RegionSet::new(crate::synthetic::tiling(3, 3), None).unwrap();
        let net = build_network(&rs, None, 1.0).unwrap();
        let layout = fit_grid(rs.boundary(), rs.centroids(), 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(metric_location(rs.centroids(), &layout), 0.0);
        assert_eq!(metric_adjacency(&rs, &layout, AdjacencyMode::Rook), 1.0);
        assert_eq!(metric_orientation(&rs, &net, &layout), 0.0);
        let shape = metric_shape(rs.boundary(), &layout.outline, &ShapeParams::default()).unwrap();
        assert!(shape >= 0.999, "{shape}");
    }

    #[test]
    fn single_region_location_and_adjacency() {
        let rs = RegionSet::new(
            vec![Region::new("a", Polygon::square(Point::ORIGIN, 1.0))],
            None,
        )
        .unwrap();
        let layout = fit_grid(rs.boundary(), rs.centroids(), 1.0, [0.0, 0.0]).unwrap();
        let off = [layout.cells[0].center + Point::new(3.0, 4.0)];
        assert_relative_eq!(metric_location(&off, &layout), 5.0);
        assert_eq!(metric_adjacency(&rs, &layout, AdjacencyMode::Rook), 1.0);
    }

    #[test]
    fn shape_examples() {
        let p = ShapeParams::default();
        let sq = Polygon::square(Point::ORIGIN, 1.0);
        assert_relative_eq!(metric_shape(&sq, &sq, &p).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            metric_shape(&sq, &sq.scale(2.0), &p).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        let long = Polygon::rect(Point::ORIGIN, Point::new(10.0, 1.0));
        assert!(metric_shape(&sq, &long, &p).unwrap() < 0.99);
        assert!(metric_shape(
            &sq,
            &sq,
            &ShapeParams {
                samples: 10,
                harmonics: 5
            }
        )
        .is_err());
    }

    #[test]
    fn noise_is_identity_at_zero_and_reproducible() {
        let rs = RegionSet::new(crate::synthetic::tiling(3, 3), None).unwrap();
        let net = build_network(&rs, None, 1.0).unwrap();
        assert_eq!(
            gaussian_noise(rs.centroids(), 0.0, &net, 5).unwrap(),
            rs.centroids()
        );
        let a = gaussian_noise(rs.centroids(), 0.04, &net, 5).unwrap();
        let b = gaussian_noise(rs.centroids(), 0.04, &net, 5).unwrap();
        let c = gaussian_noise(rs.centroids(), 0.04, &net, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(gaussian_noise(rs.centroids(), -0.1, &net, 5).is_err());
    }

    #[test]
    fn origins() {
        let o = candidate_origins();
        assert_eq!(o.len(), 4);
        assert_eq!(o[0], [0.0, 0.0]);
    }

    #[test]
    fn topsis_basics() {
        let a = report(1.0, 0.9, 10.0, 0.9);
        let b = report(2.0, 0.5, 20.0, 0.5);
        let (best, cl) = topsis_select(&[b, a], [0.25; 4]).unwrap();
        assert_eq!(best, 1);
        assert_relative_eq!(cl[1], 1.0);
        assert_relative_eq!(cl[0], 0.0);
        assert!(a.dominates(&b));
        assert!(!b.dominates(&a));
        assert_eq!(topsis_select(&[b], [0.25; 4]).unwrap(), (0, vec![1.0]));
        let (best, cl) = topsis_select(&[a, a], [0.25; 4]).unwrap();
        assert_eq!((best, cl), (0, vec![1.0, 1.0]));
        assert!(topsis_select(&[], [0.25; 4]).is_err());
        assert!(topsis_select(&[a], [0.0; 4]).is_err());
    }
}
