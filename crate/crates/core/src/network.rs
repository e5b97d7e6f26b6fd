//! The linear network: a constrained Delaunay triangulation over region
//! centroids and boundary nodes, pruned to the relative neighbourhood graph
//! while keeping boundary edges and edges between adjacent regions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation as _};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, ring_contains, Point, Polygon, RegionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Centroid of the region with this index.
    Centroid(usize),
    /// Boundary vertex at this ring position.
    Boundary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetNode {
    pub id: usize,
    pub kind: NodeKind,
    pub pos: Point,
}

impl NetNode {
    pub fn is_centroid(&self) -> bool {
        matches!(self.kind, NodeKind::Centroid(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeFlags {
    pub constrained_boundary: bool,
    pub region_adjacency: bool,
    pub rng: bool,
}

impl EdgeFlags {
    /// Constrained and adjacency edges survive pruning regardless of the RNG test.
    pub fn is_protected(&self) -> bool {
        self.constrained_boundary || self.region_adjacency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub flags: EdgeFlags,
}

/// Output of [`build_cdt`]. Vertices are the interior points followed by the
/// constraint ring, in input order.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub points: Vec<Point>,
    pub num_interior: usize,
    pub triangles: Vec<[usize; 3]>,
    /// Undirected edges `(a, b)` with `a < b`, restricted to the polygon interior.
    pub edges: BTreeSet<(usize, usize)>,
    /// The subset of `edges` lying on the constraint ring.
    pub constrained: BTreeSet<(usize, usize)>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Constrained Delaunay triangulation of `interior` points inside `constraint`,
/// keeping only triangles inside the polygon.
pub fn build_cdt(interior: &[Point], constraint: &Polygon) -> Result<Triangulation> {
    let ring = constraint.ring();
    let mut points: Vec<Point> = interior.to_vec();
    points.extend_from_slice(ring);

    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::Validation(format!("non-finite network point {p:?}")));
        }
        if let Some(j) = seen.insert((p.x.to_bits(), p.y.to_bits()), i) {
            return Err(Error::Validation(format!(
                "network points {j} and {i} coincide at {p:?}"
            )));
        }
    }
    for (i, &p) in interior.iter().enumerate() {
        if !ring_contains(ring, p) {
            return Err(Error::Validation(format!(
                "centroid {i} at {p:?} lies outside the boundary"
            )));
        }
        if on_ring(ring, p) {
            return Err(Error::Validation(format!(
                "centroid {i} at {p:?} lies on the boundary"
            )));
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handle_to_index: HashMap<usize, usize> = HashMap::new();
    let mut handles = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Validation(format!("cannot triangulate point {p:?}: {e:?}")))?;
        if handle_to_index.insert(h.index(), i).is_some() {
            return Err(Error::Validation(format!(
                "network point {i} at {p:?} merges with another point"
            )));
        }
        handles.push(h);
    }
    let n_int = interior.len();
    for k in 0..ring.len() {
        let from = handles[n_int + k];
        let to = handles[n_int + (k + 1) % ring.len()];
        if !cdt.can_add_constraint(from, to) {
            return Err(Error::UnsupportedTopology(
                "boundary ring crosses itself".into(),
            ));
        }
        cdt.add_constraint(from, to);
    }

    let mut triangles = Vec::new();
    let mut edges = BTreeSet::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices().map(|v| handle_to_index[&v.fix().index()]);
        let c = (points[vs[0]] + points[vs[1]] + points[vs[2]]) / 3.0;
        if !ring_contains(ring, c) {
            continue;
        }
        triangles.push(vs);
        for k in 0..3 {
            edges.insert(key(vs[k], vs[(k + 1) % 3]));
        }
    }
    let constrained: BTreeSet<(usize, usize)> = cdt
        .undirected_edges()
        .filter(|e| cdt.is_constraint_edge(e.fix()))
        .map(|e| {
            let [a, b] = e.vertices();
            key(
                handle_to_index[&a.fix().index()],
                handle_to_index[&b.fix().index()],
            )
        })
        .collect();
    Ok(Triangulation {
        points,
        num_interior: n_int,
        triangles,
        edges,
        constrained,
    })
}

fn on_ring(ring: &[Point], q: Point) -> bool {
    let n = ring.len();
    (0..n).any(|i| point_segment_distance(q, ring[i], ring[(i + 1) % n]) == 0.0)
}

/// Moves `p` a distance `step` away from the nearest boundary edge, towards
/// the interior, if it sits on (or numerically at) the boundary.
pub fn nudge_inside(p: Point, boundary: &Polygon, step: f64) -> Point {
    let ring = boundary.ring();
    let n = ring.len();
    let (nearest, d) = (0..n)
        .map(|i| (i, point_segment_distance(p, ring[i], ring[(i + 1) % n])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty ring");
    if d > step {
        return p;
    }
    let (a, b) = (ring[nearest], ring[(nearest + 1) % n]);
    let t = b - a;
    let mut normal = Point::new(-t.y, t.x) / t.norm();
    if !boundary.is_ccw() {
        normal = -normal;
    }
    let moved = p + normal * step;
    if ring_contains(ring, moved) {
        moved
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearNetwork {
    nodes: Vec<NetNode>,
    edges: Vec<NetEdge>,
    neighbors: Vec<Vec<usize>>,
    num_centroids: usize,
}

impl LinearNetwork {
    fn from_parts(nodes: Vec<NetNode>, mut edges: Vec<NetEdge>) -> Self {
        edges.sort_by_key(|e| (e.a, e.b));
        let mut neighbors = vec![Vec::new(); nodes.len()];
        for e in &edges {
            neighbors[e.a].push(e.b);
            neighbors[e.b].push(e.a);
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
        }
        let num_centroids = nodes.iter().filter(|n| n.is_centroid()).count();
        LinearNetwork {
            nodes,
            edges,
            neighbors,
            num_centroids,
        }
    }

    pub fn nodes(&self) -> &[NetNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[NetEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_centroids(&self) -> usize {
        self.num_centroids
    }

    pub fn num_boundary(&self) -> usize {
        self.nodes.len() - self.num_centroids
    }

    /// Neighbours of `node` in ascending id order.
    pub fn neighbors(&self, node: usize) -> Result<&[usize]> {
        self.neighbors
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownNode(node))
    }

    /// Centroid-kind neighbours of `node`.
    pub fn centroid_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[node]
            .iter()
            .copied()
            .filter(|&j| self.nodes[j].is_centroid())
    }

    pub fn positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.pos).collect()
    }

    /// Centroid positions indexed by region.
    pub fn centroid_positions(&self) -> Vec<Point> {
        let mut out = vec![Point::ORIGIN; self.num_centroids];
        for n in &self.nodes {
            if let NodeKind::Centroid(r) = n.kind {
                out[r] = n.pos;
            }
        }
        out
    }

    /// Boundary node positions in ring order.
    pub fn boundary_ring(&self) -> Vec<Point> {
        let mut out = vec![Point::ORIGIN; self.num_boundary()];
        for n in &self.nodes {
            if let NodeKind::Boundary(k) = n.kind {
                out[k] = n.pos;
            }
        }
        out
    }

    /// Centroid-to-centroid edges as region index pairs.
    pub fn centroid_links(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter_map(|e| match (self.nodes[e.a].kind, self.nodes[e.b].kind) {
                (NodeKind::Centroid(a), NodeKind::Centroid(b)) => Some((a, b)),
                _ => None,
            })
            .collect()
    }

    /// Same topology with new node positions; edge lengths are recomputed.
    pub fn with_positions(&self, positions: &[Point]) -> Result<LinearNetwork> {
        if positions.len() != self.nodes.len() {
            return Err(Error::Internal(format!(
                "{} positions for {} nodes",
                positions.len(),
                self.nodes.len()
            )));
        }
        let mut out = self.clone();
        for (n, &p) in out.nodes.iter_mut().zip(positions) {
            if !p.is_finite() {
                return Err(Error::Numerical(format!("node {} moved to {p:?}", n.id)));
            }
            n.pos = p;
        }
        for e in out.edges.iter_mut() {
            e.length = positions[e.a].dist(positions[e.b]);
            if e.length <= 0.0 {
                return Err(Error::Numerical(format!(
                    "nodes {} and {} collapsed onto each other",
                    e.a, e.b
                )));
            }
        }
        Ok(out)
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes.len()
    }

    /// Debug dump: one LineString feature per edge with its flags.
    pub fn to_geojson(&self) -> Value {
        let features: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                let (p, q) = (self.nodes[e.a].pos, self.nodes[e.b].pos);
                json!({
                    "type": "Feature",
                    "properties": {
                        "a": e.a,
                        "b": e.b,
                        "length": e.length,
                        "constrained_boundary": e.flags.constrained_boundary,
                        "region_adjacency": e.flags.region_adjacency,
                        "rng": e.flags.rng,
                    },
                    "geometry": {"type": "LineString", "coordinates": [[p.x, p.y], [q.x, q.y]]},
                })
            })
            .collect();
        json!({"type": "FeatureCollection", "features": features})
    }
}

/// True when no third point `w` has `max(|aw|, |bw|) < |ab|`.
pub fn passes_rng_test(points: &[Point], a: usize, b: usize) -> bool {
    let ab = points[a].dist_sq(points[b]);
    !points
        .iter()
        .enumerate()
        .any(|(w, &pw)| w != a && w != b && pw.dist_sq(points[a]).max(pw.dist_sq(points[b])) < ab)
}

/// Prunes the triangulation to the linear network.
///
/// The triangulation's interior points must be the region centroids in region
/// order, and its ring the region set's boundary nodes.
pub fn extract_network(cdt: &Triangulation, rs: &RegionSet) -> Result<LinearNetwork> {
    let m = rs.len();
    if cdt.num_interior != m {
        return Err(Error::Internal(format!(
            "triangulation has {} interior points for {m} regions",
            cdt.num_interior
        )));
    }
    let nodes: Vec<NetNode> = cdt
        .points
        .iter()
        .enumerate()
        .map(|(id, &pos)| NetNode {
            id,
            kind: if id < m {
                NodeKind::Centroid(id)
            } else {
                NodeKind::Boundary(id - m)
            },
            pos,
        })
        .collect();

    let mut kept: BTreeMap<(usize, usize), EdgeFlags> = BTreeMap::new();
    for &(a, b) in &cdt.edges {
        let flags = EdgeFlags {
            constrained_boundary: cdt.constrained.contains(&(a, b)),
            region_adjacency: a < m && b < m && rs.are_adjacent(a, b),
            rng: passes_rng_test(&cdt.points, a, b),
        };
        if flags.is_protected() || flags.rng {
            kept.insert((a, b), flags);
        }
    }
    for &(a, b) in rs.adjacency() {
        kept.entry((a, b)).or_insert_with(|| {
            warn!(
                "regions {} and {} are adjacent but their centroids share no triangulation edge; adding a link",
                rs.regions()[a].id,
                rs.regions()[b].id
            );
            EdgeFlags {
                region_adjacency: true,
                ..EdgeFlags::default()
            }
        });
    }
    let edges = kept
        .into_iter()
        .map(|((a, b), flags)| NetEdge {
            a,
            b,
            length: cdt.points[a].dist(cdt.points[b]),
            flags,
        })
        .collect();
    let net = LinearNetwork::from_parts(nodes, edges);
    if !net.is_connected() {
        return Err(Error::Internal("linear network is disconnected".into()));
    }
    Ok(net)
}

/// Builds the linear network for `rs` from the given centroid positions (or
/// the region centroids), nudging centroids that sit on the boundary inward by
/// `1e-6 * grid_size`.
pub fn build_network(
    rs: &RegionSet,
    centroids: Option<&[Point]>,
    grid_size: f64,
) -> Result<LinearNetwork> {
    let boundary = rs.boundary();
    let centroids: Vec<Point> = centroids
        .unwrap_or(rs.centroids())
        .iter()
        .map(|&c| nudge_inside(c, boundary, 1e-6 * grid_size))
        .collect();
    let cdt = build_cdt(&centroids, boundary)?;
    extract_network(&cdt, rs)
}
