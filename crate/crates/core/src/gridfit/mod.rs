//! Square-grid fitting: lay a lattice over the transformed boundary, keep the
//! best-covered cells and assign regions to them by optimal matching.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{clipped_area, point_in_polygon, Point, Polygon};

pub use self::hungarian::hungarian;

/// Overlap below this fraction of a cell's area counts as touching only.
const MIN_OVERLAP_FRACTION: f64 = 1e-9;

/// Lattice placement. Rows grow downward from the origin, columns rightward;
/// indices may be negative when the origin is shifted into the boundary box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub s: f64,
    /// Origin offset as fractions of `s`.
    pub shift: [f64; 2],
}

impl GridSpec {
    /// Origin at `(x_min + dx·s, y_max + dy·s)` of the boundary's bounding box.
    pub fn new(boundary: &Polygon, s: f64, shift: [f64; 2]) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Validation(format!(
                "cell size must be positive, got {s}"
            )));
        }
        if !shift.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("grid shift must be finite".into()));
        }
        let bb = boundary.bbox();
        Ok(GridSpec {
            origin: Point::new(bb.min_x + shift[0] * s, bb.max_y + shift[1] * s),
            s,
            shift,
        })
    }

    /// Lattice corner `(row, col)`; the top-left corner of cell `(row, col)`.
    pub fn corner(&self, row: i64, col: i64) -> Point {
        Point::new(
            self.origin.x + col as f64 * self.s,
            self.origin.y - row as f64 * self.s,
        )
    }

    pub fn center(&self, row: i64, col: i64) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.s,
            self.origin.y - (row as f64 + 0.5) * self.s,
        )
    }

    /// Counter-clockwise square of cell `(row, col)`.
    pub fn square(&self, row: i64, col: i64) -> Polygon {
        Polygon::square(self.corner(row + 1, col), self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub row: i64,
    pub col: i64,
    pub center: Point,
    pub score: f64,
}

/// `cell_of[m]` is the index into the selected cells for region `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cell_of: Vec<usize>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub spec: GridSpec,
    pub cells: Vec<GridCell>,
    pub assignment: Assignment,
    pub outline: Polygon,
}

impl GridLayout {
    /// Cell assigned to region `m`.
    pub fn cell_for(&self, m: usize) -> &GridCell {
        &self.cells[self.assignment.cell_of[m]]
    }

    pub fn to_json(&self, region_ids: &[&str]) -> LayoutJson {
        LayoutJson {
            origin: self.spec.origin,
            s: self.spec.s,
            shift: self.spec.shift,
            cells: self
                .cells
                .iter()
                .map(|c| CellRef {
                    row: c.row,
                    col: c.col,
                })
                .collect(),
            assignment: region_ids
                .iter()
                .enumerate()
                .map(|(m, id)| {
                    let c = self.cell_for(m);
                    RegionCell {
                        region_id: id.to_string(),
                        row: c.row,
                        col: c.col,
                    }
                })
                .collect(),
            total_cost: self.assignment.total_cost,
        }
    }
}

/// Serialized form of a [`GridLayout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutJson {
    pub origin: Point,
    pub s: f64,
    pub shift: [f64; 2],
    pub cells: Vec<CellRef>,
    pub assignment: Vec<RegionCell>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRef {
    pub row: i64,
    pub col: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionCell {
    pub region_id: String,
    pub row: i64,
    pub col: i64,
}

impl LayoutJson {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            origin: self.origin,
            s: self.s,
            shift: self.shift,
        }
    }
}

/// Every lattice cell overlapping the boundary with positive area, scored,
/// in (row, col) order.
pub fn lay_grid(boundary: &Polygon, spec: &GridSpec) -> Vec<GridCell> {
    let bb = boundary.bbox();
    let s = spec.s;
    let col_lo = ((bb.min_x - spec.origin.x) / s).floor() as i64;
    let col_hi = ((bb.max_x - spec.origin.x) / s).ceil() as i64;
    let row_lo = ((spec.origin.y - bb.max_y) / s).floor() as i64;
    let row_hi = ((spec.origin.y - bb.min_y) / s).ceil() as i64;
    let mut cells = Vec::new();
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            let score = cell_score(boundary, spec, row, col);
            if score > 0.0 {
                cells.push(GridCell {
                    row,
                    col,
                    center: spec.center(row, col),
                    score,
                });
            }
        }
    }
    cells
}

/// Overlap fraction of the cell with the boundary, plus one if the cell
/// centre lies inside or on the boundary. Cells that merely touch the boundary score 0.
pub fn cell_score(boundary: &Polygon, spec: &GridSpec, row: i64, col: i64) -> f64 {
    let square = spec.square(row, col);
    let fraction = (clipped_area(boundary.ring(), square.ring()) / (spec.s * spec.s)).min(1.0);
    if fraction <= MIN_OVERLAP_FRACTION {
        return 0.0;
    }
    let bonus = if point_in_polygon(spec.center(row, col), boundary) {
        1.0
    } else {
        0.0
    };
    fraction + bonus
}

/// The `m` best cells by descending score, ties by ascending (row, col).
/// The result is returned in (row, col) order.
pub fn select_cells(candidates: &[GridCell], m: usize) -> Result<Vec<GridCell>> {
    if candidates.len() < m {
        return Err(Error::InfeasibleGrid {
            needed: m,
            available: candidates.len(),
        });
    }
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then((a.row, a.col).cmp(&(b.row, b.col)))
    });
    ranked.truncate(m);
    ranked.sort_by_key(|c| (c.row, c.col));
    Ok(ranked)
}

/// Bijection minimizing the summed squared distance between centroids and
/// their cell centres.
pub fn assign_regions(centroids: &[Point], cells: &[GridCell]) -> Result<Assignment> {
    if centroids.len() != cells.len() {
        return Err(Error::Validation(format!(
            "{} centroids cannot be matched to {} cells",
            centroids.len(),
            cells.len()
        )));
    }
    let cost: Vec<Vec<f64>> = centroids
        .iter()
        .map(|&p| cells.iter().map(|c| p.dist_sq(c.center)).collect())
        .collect();
    let (cell_of, total_cost) = hungarian(&cost)?;
    Ok(Assignment {
        cell_of,
        total_cost,
    })
}

type Vertex = (i64, i64);

/// Outer ring of the union of the cells. Cells that are not rook-connected to
/// the largest component are ignored with a warning.
pub fn grid_outline(spec: &GridSpec, cells: &[GridCell]) -> Result<Polygon> {
    if cells.is_empty() {
        return Err(Error::Validation("cannot outline an empty cell set".into()));
    }
    let component = largest_component(cells);
    if component.len() < cells.len() {
        warn!(
            "selected cells form several edge-connected groups; outlining the largest ({} of {})",
            component.len(),
            cells.len()
        );
    }
    // Directed lattice edges between (row, col) corners, counter-clockwise in
    // map coordinates. Shared edges appear in both directions and cancel.
    let mut edges: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
    for &(r, c) in &component {
        let corners = [(r + 1, c), (r + 1, c + 1), (r, c + 1), (r, c)];
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            if !edges.remove(&(b, a)) {
                edges.insert((a, b));
            }
        }
    }
    let mut outgoing: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for &(a, b) in &edges {
        outgoing.entry(a).or_default().push(b);
    }
    let mut best: Option<(f64, Vec<Vertex>)> = None;
    let mut unused = edges.clone();
    while let Some(&(start, next)) = unused.iter().next() {
        unused.remove(&(start, next));
        let mut ring = vec![start];
        let (mut prev, mut cur) = (start, next);
        while cur != start {
            ring.push(cur);
            let choice = outgoing[&cur]
                .iter()
                .copied()
                .filter(|&to| unused.contains(&(cur, to)))
                .max_by_key(|&to| turn_rank(prev, cur, to))
                .ok_or_else(|| Error::Internal("grid outline tracing lost its ring".into()))?;
            unused.remove(&(cur, choice));
            prev = cur;
            cur = choice;
        }
        let area = lattice_ring_area(&ring);
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, ring));
        }
    }
    let (_, ring) = best.ok_or_else(|| Error::Internal("grid outline has no ring".into()))?;
    let ring = drop_collinear(&ring);
    Polygon::new(ring.iter().map(|&(r, c)| spec.corner(r, c)).collect())
}

/// Direction in map coordinates for a lattice step (rows grow downward).
fn lattice_dir(a: Vertex, b: Vertex) -> (i64, i64) {
    (b.1 - a.1, a.0 - b.0)
}

/// Higher is more clockwise: right turn 2, straight 1, left 0.
fn turn_rank(prev: Vertex, cur: Vertex, next: Vertex) -> i64 {
    let (ux, uy) = lattice_dir(prev, cur);
    let (vx, vy) = lattice_dir(cur, next);
    let cross = ux * vy - uy * vx;
    1 - cross.signum()
}

fn lattice_ring_area(ring: &[Vertex]) -> f64 {
    let n = ring.len();
    let twice: i64 = (0..n)
        .map(|i| {
            let (ax, ay) = (ring[i].1, -ring[i].0);
            let (bx, by) = (ring[(i + 1) % n].1, -ring[(i + 1) % n].0);
            ax * by - ay * bx
        })
        .sum();
    twice as f64 / 2.0
}

fn drop_collinear(ring: &[Vertex]) -> Vec<Vertex> {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let (p, c, q) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            lattice_dir(p, c) != lattice_dir(c, q)
        })
        .map(|i| ring[i])
        .collect()
}

/// Largest rook-connected group of cells; ties go to the group containing the
/// smallest (row, col).
fn largest_component(cells: &[GridCell]) -> Vec<Vertex> {
    let all: BTreeSet<Vertex> = cells.iter().map(|c| (c.row, c.col)).collect();
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut best: Vec<Vertex> = Vec::new();
    for &start in &all {
        if seen.contains(&start) {
            continue;
        }
        let mut group = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some((r, c)) = queue.pop_front() {
            group.push((r, c));
            for nb in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                if all.contains(&nb) && seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        if group.len() > best.len() {
            best = group;
        }
    }
    best.sort_unstable();
    best
}

/// Steps 4a-4c: lay the lattice over `boundary`, select one cell per centroid
/// and assign centroids to cells.
pub fn fit_grid(
    boundary: &Polygon,
    centroids: &[Point],
    s: f64,
    shift: [f64; 2],
) -> Result<GridLayout> {
    let spec = GridSpec::new(boundary, s, shift)?;
    let candidates = lay_grid(boundary, &spec);
    let cells = select_cells(&candidates, centroids.len())?;
    let assignment = assign_regions(centroids, &cells)?;
    let outline = grid_outline(&spec, &cells)?;
    Ok(GridLayout {
        spec,
        cells,
        assignment,
        outline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> Polygon {
        Polygon::square(Point::ORIGIN, 1.0)
    }

    fn cell(row: i64, col: i64, score: f64) -> GridCell {
        GridCell {
            row,
            col,
            center: Point::new(col as f64 + 0.5, -(row as f64) - 0.5),
            score,
        }
    }

    #[test]
    fn lay_grid_examples() {
        let spec = GridSpec::new(&unit(), 1.0, [0.0, 0.0]).unwrap();
        let cells = lay_grid(&unit(), &spec);
        assert_eq!(cells.len(), 1);
        assert_eq!((cells[0].row, cells[0].col), (0, 0));
        assert_eq!(cells[0].center, Point::new(0.5, 0.5));
        assert_relative_eq!(cells[0].score, 2.0);

        // each cell half covered, centre on the boundary (counts as inside)
        let spec = GridSpec::new(&unit(), 1.0, [0.5, 0.0]).unwrap();
        let cells = lay_grid(&unit(), &spec);
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert_relative_eq!(c.score, 1.5, epsilon = 1e-12);
        }
        let spec = GridSpec::new(&unit(), 1.0, [0.5, 0.5]).unwrap();
        let cells = lay_grid(&unit(), &spec);
        assert_eq!(cells.len(), 4);

        let rect = Polygon::rect(Point::ORIGIN, Point::new(2.0, 1.0));
        let spec = GridSpec::new(&rect, 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(lay_grid(&rect, &spec).len(), 2);
    }

    #[test]
    fn score_rewards_inside_centres() {
        // triangle covering half of the unit cell, centre on the boundary
        let tri = Polygon::new(vec![
            Point::ORIGIN,
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let spec = GridSpec::new(&tri, 1.0, [0.0, 0.0]).unwrap();
        assert_relative_eq!(cell_score(&tri, &spec, 0, 0), 1.5, epsilon = 1e-12);
        let small = Polygon::new(vec![
            Point::ORIGIN,
            Point::new(0.9, 0.0),
            Point::new(0.0, 0.9),
        ])
        .unwrap();
        let spec = GridSpec::new(&small, 1.0, [0.0, 0.0]).unwrap();
        let spec = GridSpec {
            origin: Point::new(0.0, 1.0),
            ..spec
        };
        assert_relative_eq!(cell_score(&small, &spec, 0, 0), 0.405, epsilon = 1e-12);
        assert_eq!(cell_score(&small, &spec, 0, 3), 0.0);
    }

    #[test]
    fn select_examples() {
        let cands = [
            cell(0, 0, 0.5),
            cell(0, 1, 2.0),
            cell(1, 0, 0.1),
            cell(1, 1, 1.2),
        ];
        let sel = select_cells(&cands, 2).unwrap();
        assert_eq!(
            sel.iter().map(|c| (c.row, c.col)).collect::<Vec<_>>(),
            vec![(0, 1), (1, 1)]
        );
        let equal = [
            cell(1, 0, 1.0),
            cell(0, 1, 1.0),
            cell(0, 0, 1.0),
            cell(1, 1, 1.0),
        ];
        let sel = select_cells(&equal, 3).unwrap();
        assert_eq!(
            sel.iter().map(|c| (c.row, c.col)).collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (1, 0)]
        );
        assert_eq!(select_cells(&equal, 4).unwrap().len(), 4);
        assert!(matches!(
            select_cells(&equal, 5),
            Err(Error::InfeasibleGrid {
                needed: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn assignment_examples() {
        let cells = [cell(0, 0, 1.0), cell(0, 1, 1.0)];
        let a = assign_regions(&[cells[0].center, cells[1].center], &cells).unwrap();
        assert_eq!(a.cell_of, vec![0, 1]);
        assert_eq!(a.total_cost, 0.0);
        let a = assign_regions(&[cells[1].center, cells[0].center], &cells).unwrap();
        assert_eq!(a.cell_of, vec![1, 0]);
        assert_eq!(a.total_cost, 0.0);
        assert!(assign_regions(&[Point::ORIGIN], &cells).is_err());
    }

    #[test]
    fn outline_examples() {
        let spec = GridSpec {
            origin: Point::new(0.0, 0.0),
            s: 2.0,
            shift: [0.0, 0.0],
        };
        let one = grid_outline(&spec, &[cell(0, 0, 1.0)]).unwrap();
        assert_eq!(one.len(), 4);
        assert_relative_eq!(one.area(), 4.0);
        let block = [
            cell(0, 0, 1.0),
            cell(0, 1, 1.0),
            cell(1, 0, 1.0),
            cell(1, 1, 1.0),
        ];
        let sq = grid_outline(&spec, &block).unwrap();
        assert_eq!(sq.len(), 4);
        assert_relative_eq!(sq.area(), 16.0);
        assert!(sq.is_ccw());
        let l = grid_outline(&spec, &[cell(0, 0, 1.0), cell(1, 0, 1.0), cell(1, 1, 1.0)]).unwrap();
        assert_eq!(l.len(), 6);
        assert_relative_eq!(l.area(), 12.0);
    }

    #[test]
    fn outline_of_ring_with_hole_is_outer_square() {
        let spec = GridSpec {
            origin: Point::ORIGIN,
            s: 1.0,
            shift: [0.0, 0.0],
        };
        let cells: Vec<GridCell> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&rc| rc != (1, 1))
            .map(|(r, c)| cell(r, c, 1.0))
            .collect();
        let outline = grid_outline(&spec, &cells).unwrap();
        assert_eq!(outline.len(), 4);
        assert_relative_eq!(outline.area(), 9.0);
    }

    #[test]
    fn disconnected_cells_keep_largest_group() {
        let spec = GridSpec {
            origin: Point::ORIGIN,
            s: 1.0,
            shift: [0.0, 0.0],
        };
        let cells = [cell(0, 0, 1.0), cell(0, 1, 1.0), cell(5, 5, 1.0)];
        let outline = grid_outline(&spec, &cells).unwrap();
        assert_relative_eq!(outline.area(), 2.0);
    }

    #[test]
    fn fit_identity_tiling() {
        let boundary = Polygon::square(Point::ORIGIN, 3.0);
        let centroids: Vec<Point> = (0..3)
            .flat_map(|r| (0..3).map(move |c| Point::new(c as f64 + 0.5, r as f64 + 0.5)))
            .collect();
        let layout = fit_grid(&boundary, &centroids, 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(layout.cells.len(), 9);
        assert_eq!(layout.assignment.total_cost, 0.0);
        for (m, &c) in centroids.iter().enumerate() {
            assert_eq!(layout.cell_for(m).center, c);
        }
        assert_relative_eq!(layout.outline.area(), 9.0);
    }
}
