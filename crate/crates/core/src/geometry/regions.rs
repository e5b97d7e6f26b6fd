use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{compute_centroid, point_segment_distance, polygon_is_simple, BBox, Point, Polygon};
use crate::error::{Error, Result};

/// Relative vertex snapping tolerance, as a fraction of the bounding-box diagonal.
pub const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub polygon: Polygon,
}

impl Region {
    pub fn new(id: impl Into<String>, polygon: Polygon) -> Self {
        Region {
            id: id.into(),
            polygon,
        }
    }
}

/// Input regions together with their centroids, rook adjacency and outer boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    regions: Vec<Region>,
    centroids: Vec<Point>,
    /// Index pairs `(a, b)` with `a < b`.
    adjacency: BTreeSet<(usize, usize)>,
    boundary: Polygon,
}

impl RegionSet {
    /// Builds the set, deriving centroids, adjacency and (unless supplied) the
    /// outer boundary.
    pub fn new(regions: Vec<Region>, boundary: Option<Polygon>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Validation("no regions supplied".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &regions {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Validation(format!("duplicate region id '{}'", r.id)));
            }
        }
        let centroids = regions
            .iter()
            .map(|r| compute_centroid(&r.polygon))
            .collect::<Result<Vec<_>>>()?;
        let topo = Topology::build(&regions)?;
        let adjacency = topo.adjacency();
        let boundary = match boundary {
            Some(b) => b.to_ccw(),
            None => topo.outer_boundary()?,
        };
        if !polygon_is_simple(&boundary) {
            return Err(Error::UnsupportedTopology(
                "outer boundary is not a simple polygon".into(),
            ));
        }
        Ok(RegionSet {
            regions,
            centroids,
            adjacency,
            boundary,
        })
    }

    /// Replaces the centroids, e.g. with perturbed positions.
    pub fn with_centroids(mut self, centroids: Vec<Point>) -> Result<Self> {
        if centroids.len() != self.regions.len() {
            return Err(Error::Validation(format!(
                "{} centroids supplied for {} regions",
                centroids.len(),
                self.regions.len()
            )));
        }
        self.centroids = centroids;
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: Polygon) -> Self {
        self.boundary = boundary.to_ccw();
        self
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.regions.iter().map(|r| r.id.as_str())
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn adjacency(&self) -> &BTreeSet<(usize, usize)> {
        &self.adjacency
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }

    /// Adjacency as id pairs, each pair in region order.
    pub fn adjacent_ids(&self) -> Vec<(&str, &str)> {
        self.adjacency
            .iter()
            .map(|&(a, b)| (self.regions[a].id.as_str(), self.regions[b].id.as_str()))
            .collect()
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn total_area(&self) -> f64 {
        self.regions.iter().map(|r| r.polygon.area()).sum()
    }

    pub fn bbox(&self) -> BBox {
        self.regions
            .iter()
            .map(|r| r.polygon.bbox())
            .reduce(|a, b| a.union(&b))
            .expect("at least one region")
    }
}

/// Rook adjacency: index pairs of regions sharing a boundary segment of
/// positive length.
pub fn region_adjacency(regions: &[Region]) -> Result<BTreeSet<(usize, usize)>> {
    Ok(Topology::build(regions)?.adjacency())
}

/// The ring formed by region edges that are not shared between two regions.
pub fn outer_boundary(regions: &[Region]) -> Result<Polygon> {
    Topology::build(regions)?.outer_boundary()
}

/// Snapped vertex table plus each region's ring as counter-clockwise vertex ids,
/// with T-junction vertices inserted into the edges they lie on.
struct Topology {
    vertices: Vec<Point>,
    rings: Vec<Vec<usize>>,
}

impl Topology {
    fn build(regions: &[Region]) -> Result<Self> {
        let bbox = regions
            .iter()
            .map(|r| r.polygon.bbox())
            .reduce(|a, b| a.union(&b))
            .ok_or_else(|| Error::Validation("no regions supplied".into()))?;
        let tol = SNAP_TOLERANCE * bbox.diagonal();

        let mut vertices: Vec<Point> = Vec::new();
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let cell = |p: Point| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
        let mut snap = |p: Point| -> usize {
            let (cx, cy) = cell(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = grid.get(&(cx + dx, cy + dy)) {
                        for &id in ids {
                            if vertices[id].dist(p) <= tol {
                                return id;
                            }
                        }
                    }
                }
            }
            let id = vertices.len();
            vertices.push(p);
            grid.entry((cx, cy)).or_default().push(id);
            id
        };

        let mut rings = Vec::with_capacity(regions.len());
        for r in regions {
            let poly = r.polygon.to_ccw();
            let mut ring: Vec<usize> = Vec::with_capacity(poly.len());
            for &p in poly.ring() {
                let id = snap(p);
                if ring.last() != Some(&id) {
                    ring.push(id);
                }
            }
            while ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(Error::DegenerateGeometry(format!(
                    "region '{}' collapses after vertex snapping",
                    r.id
                )));
            }
            rings.push(ring);
        }

        // split edges at vertices lying on them
        let mut by_x: Vec<usize> = (0..vertices.len()).collect();
        by_x.sort_by(|&a, &b| vertices[a].x.total_cmp(&vertices[b].x));
        let xs: Vec<f64> = by_x.iter().map(|&i| vertices[i].x).collect();
        for ring in rings.iter_mut() {
            let n = ring.len();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let (u, v) = (ring[i], ring[(i + 1) % n]);
                out.push(u);
                let (a, b) = (vertices[u], vertices[v]);
                let lo = xs.partition_point(|&x| x < a.x.min(b.x) - tol);
                let hi = xs.partition_point(|&x| x <= a.x.max(b.x) + tol);
                let ab = b - a;
                let len_sq = ab.dot(ab);
                let mut inner: Vec<(f64, usize)> = by_x[lo..hi]
                    .iter()
                    .copied()
                    .filter(|&w| w != u && w != v)
                    .filter_map(|w| {
                        let q = vertices[w];
                        let t = (q - a).dot(ab) / len_sq;
                        (t > 0.0 && t < 1.0 && point_segment_distance(q, a, b) <= tol)
                            .then_some((t, w))
                    })
                    .collect();
                inner.sort_by(|x, y| x.0.total_cmp(&y.0));
                out.extend(inner.into_iter().map(|(_, w)| w));
            }
            *ring = out;
        }
        Ok(Topology { vertices, rings })
    }

    fn undirected_edges(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (r, ring) in self.rings.iter().enumerate() {
            let n = ring.len();
            for i in 0..n {
                let (u, v) = (ring[i], ring[(i + 1) % n]);
                edges.entry((u.min(v), u.max(v))).or_default().push(r);
            }
        }
        edges
    }

    fn adjacency(&self) -> BTreeSet<(usize, usize)> {
        let mut adj = BTreeSet::new();
        for owners in self.undirected_edges().values() {
            for (i, &a) in owners.iter().enumerate() {
                for &b in &owners[i + 1..] {
                    if a != b {
                        adj.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
        adj
    }

    fn outer_boundary(&self) -> Result<Polygon> {
        // net directed multiplicity per undirected edge; interior edges cancel
        let mut net: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for ring in &self.rings {
            let n = ring.len();
            for i in 0..n {
                let (u, v) = (ring[i], ring[(i + 1) % n]);
                *net.entry((u.min(v), u.max(v))).or_default() += if u < v { 1 } else { -1 };
            }
        }
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for (&(a, b), &count) in &net {
            let (u, v) = match count {
                0 => continue,
                1 => (a, b),
                -1 => (b, a),
                _ => {
                    return Err(Error::UnsupportedTopology(format!(
                        "regions overlap along the edge {:?}-{:?}",
                        self.vertices[a], self.vertices[b]
                    )))
                }
            };
            if next.insert(u, v).is_some() {
                return Err(Error::UnsupportedTopology(format!(
                    "boundary pinches at {:?}",
                    self.vertices[u]
                )));
            }
        }
        let start = *next
            .keys()
            .next()
            .ok_or_else(|| Error::UnsupportedTopology("regions have no outer boundary".into()))?;
        let mut ring = vec![start];
        let mut cur = next[&start];
        while cur != start {
            ring.push(cur);
            cur = *next.get(&cur).ok_or_else(|| {
                Error::UnsupportedTopology("outer boundary edges do not close".into())
            })?;
            if ring.len() > next.len() {
                return Err(Error::Internal("boundary walk did not terminate".into()));
            }
        }
        if ring.len() != next.len() {
            return Err(Error::UnsupportedTopology(format!(
                "boundary edges form more than one ring ({} of {} edges in the first)",
                ring.len(),
                next.len()
            )));
        }
        Polygon::new(ring.into_iter().map(|i| self.vertices[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, x: f64, y: f64) -> Region {
        Region::new(id, Polygon::square(Point::new(x, y), 1.0))
    }

    fn block(k: usize) -> Vec<Region> {
        let mut out = Vec::new();
        for r in 0..k {
            for c in 0..k {
                out.push(square(&format!("{r}-{c}"), c as f64, r as f64));
            }
        }
        out
    }

    #[test]
    fn shared_edge_is_adjacent_corner_is_not() {
        let adj = region_adjacency(&[square("a", 0.0, 0.0), square("b", 1.0, 0.0)]).unwrap();
        assert_eq!(adj.into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
        let adj = region_adjacency(&[square("a", 0.0, 0.0), square("b", 1.0, 1.0)]).unwrap();
        assert!(adj.is_empty());
    }

    #[test]
    fn three_by_three_block_has_twelve_rook_pairs() {
        // oracle: count shared unit edges directly from grid indices
        let k = 3;
        let mut expected = BTreeSet::new();
        for r in 0..k {
            for c in 0..k {
                let i = r * k + c;
                if c + 1 < k {
                    expected.insert((i, i + 1));
                }
                if r + 1 < k {
                    expected.insert((i, i + k));
                }
            }
        }
        assert_eq!(expected.len(), 12);
        assert_eq!(region_adjacency(&block(3)).unwrap(), expected);
    }

    #[test]
    fn t_junction_still_counts_as_adjacent() {
        // one tall region beside two stacked squares: the tall edge has no vertex at y=1
        let tall = Region::new(
            "tall",
            Polygon::rect(Point::new(0.0, 0.0), Point::new(1.0, 2.0)),
        );
        let regions = vec![tall, square("lo", 1.0, 0.0), square("hi", 1.0, 1.0)];
        let adj = region_adjacency(&regions).unwrap();
        assert!(adj.contains(&(0, 1)) && adj.contains(&(0, 2)) && adj.contains(&(1, 2)));
        let b = outer_boundary(&regions).unwrap();
        assert!((b.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_squares_make_a_rectangle_outline() {
        let b = outer_boundary(&[square("a", 0.0, 0.0), square("b", 1.0, 0.0)]).unwrap();
        assert_eq!(b.len(), 6);
        assert!((b.area() - 2.0).abs() < 1e-12);
        assert!(b.is_ccw());
    }

    #[test]
    fn single_polygon_outline_is_itself() {
        let r = square("a", 0.0, 0.0);
        let b = outer_boundary(std::slice::from_ref(&r)).unwrap();
        assert_eq!(b, r.polygon);
    }

    #[test]
    fn three_by_three_outline() {
        // oracle: boundary vertices of a k x k lattice block are the 4k lattice
        // points on the outer square
        let b = outer_boundary(&block(3)).unwrap();
        assert_eq!(b.len(), 12);
        assert!((b.area() - 9.0).abs() < 1e-12);
        for p in b.ring() {
            assert!(p.x == 0.0 || p.x == 3.0 || p.y == 0.0 || p.y == 3.0);
        }
    }

    #[test]
    fn disjoint_regions_are_rejected() {
        let err = outer_boundary(&[square("a", 0.0, 0.0), square("b", 5.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedTopology(_)));
    }

    #[test]
    fn near_identical_vertices_are_snapped() {
        let a = square("a", 0.0, 0.0);
        let b = Region::new(
            "b",
            Polygon::new(vec![
                Point::new(1.0 + 1e-13, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(1.0, 1.0 - 1e-13),
            ])
            .unwrap(),
        );
        let rs = RegionSet::new(vec![a, b], None).unwrap();
        assert_eq!(rs.adjacent_ids(), vec![("a", "b")]);
        assert!((rs.boundary().area() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err =
            RegionSet::new(vec![square("a", 0.0, 0.0), square("a", 1.0, 0.0)], None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
