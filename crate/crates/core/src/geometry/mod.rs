//! Planar polygon primitives used throughout the pipeline.
//!
//! Coordinates are planar and carried in input units; nothing here reprojects.

mod geojson;
mod regions;

pub use self::geojson::{
    load_boundary, load_regions, load_regions_with_boundary, polygon_geometry, regions_to_geojson,
};
pub use self::regions::{outer_boundary, region_adjacency, Region, RegionSet};

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let d = self - other;
        d.dot(d)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, k: f64) -> Point {
        Point::new(self.x / k, self.y / k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Euclidean distance from `q` to the closed segment `a`-`b`.
pub fn point_segment_distance(q: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return q.dist(a);
    }
    let t = ((q - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    q.dist(a + ab * t)
}

fn on_segment(a: Point, b: Point, q: Point) -> bool {
    q.x >= a.x.min(b.x) && q.x <= a.x.max(b.x) && q.y >= a.y.min(b.y) && q.y <= a.y.max(b.y)
}

/// True when the closed segments `p1p2` and `q1q2` share at least one point.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn from_points<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> Option<BBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = BBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in it {
            bb.min_x = bb.min_x.min(p.x);
            bb.min_y = bb.min_y.min(p.y);
            bb.max_x = bb.max_x.max(p.x);
            bb.max_y = bb.max_y.max(p.y);
        }
        Some(bb)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

/// A simple ring stored without the closing vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    ring: Vec<Point>,
}

impl Polygon {
    /// Validates the ring: at least three finite vertices, no consecutive
    /// duplicates (cyclically) and non-zero signed area. A trailing copy of the
    /// first vertex is dropped.
    pub fn new(mut ring: Vec<Point>) -> Result<Self> {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                ring.len()
            )));
        }
        if let Some(p) = ring.iter().find(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("non-finite coordinate {p:?}")));
        }
        let n = ring.len();
        for i in 0..n {
            if ring[i] == ring[(i + 1) % n] {
                return Err(Error::DegenerateGeometry(format!(
                    "consecutive duplicate vertex at {:?}",
                    ring[i]
                )));
            }
        }
        let poly = Polygon { ring };
        if poly.signed_area() == 0.0 {
            return Err(Error::DegenerateGeometry("polygon has zero area".into()));
        }
        Ok(poly)
    }

    /// Like [`Polygon::new`] but also removes consecutive duplicate vertices first.
    pub fn from_ring_dedup(ring: Vec<Point>) -> Result<Self> {
        let mut out: Vec<Point> = Vec::with_capacity(ring.len());
        for p in ring {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Polygon::new(out)
    }

    /// Axis-aligned square with lower-left corner `min` and side `side`, counter-clockwise.
    pub fn square(min: Point, side: f64) -> Self {
        Polygon {
            ring: vec![
                min,
                Point::new(min.x + side, min.y),
                Point::new(min.x + side, min.y + side),
                Point::new(min.x, min.y + side),
            ],
        }
    }

    pub fn rect(min: Point, max: Point) -> Self {
        Polygon {
            ring: vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)],
        }
    }

    pub fn ring(&self) -> &[Point] {
        &self.ring
    }

    pub fn into_ring(self) -> Vec<Point> {
        self.ring
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    /// Directed edges `(ring[i], ring[i + 1])`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.ring.len();
        (0..n).map(move |i| (self.ring[i], self.ring[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        ring_signed_area(&self.ring)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Same polygon with counter-clockwise orientation.
    pub fn to_ccw(&self) -> Polygon {
        let mut p = self.clone();
        if !p.is_ccw() {
            p.ring.reverse();
        }
        p
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_points(&self.ring).expect("polygon has vertices")
    }

    pub fn translate(&self, v: Point) -> Polygon {
        Polygon {
            ring: self.ring.iter().map(|&p| p + v).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Polygon {
        Polygon {
            ring: self.ring.iter().map(|&p| p * k).collect(),
        }
    }
}

/// Shoelace area of an open ring, computed relative to the first vertex.
pub fn ring_signed_area(ring: &[Point]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut acc = 0.0;
    for i in 1..ring.len() - 1 {
        acc += (ring[i] - o).cross(ring[i + 1] - o);
    }
    acc * 0.5
}

/// Area-weighted centroid of the enclosed region.
pub fn compute_centroid(p: &Polygon) -> Result<Point> {
    let ring = p.ring();
    let o = ring[0];
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 1..ring.len() - 1 {
        let a = ring[i] - o;
        let b = ring[i + 1] - o;
        let w = a.cross(b);
        area2 += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    if area2 == 0.0 || !area2.is_finite() {
        return Err(Error::DegenerateGeometry(
            "cannot take the centroid of a zero-area polygon".into(),
        ));
    }
    Ok(Point::new(
        o.x + cx / (3.0 * area2),
        o.y + cy / (3.0 * area2),
    ))
}

/// Douglas-Peucker simplification of a closed ring.
///
/// The ring is split at vertex 0 and the vertex furthest from it; each chain is
/// simplified against segment distance. Should fewer than three vertices
/// survive, the vertex furthest from the anchor chord is added back.
pub fn simplify_boundary(p: &Polygon, tol: f64) -> Polygon {
    let ring = p.ring();
    let n = ring.len();
    if tol <= 0.0 || n <= 3 {
        return p.clone();
    }
    let far = (1..n)
        .fold((0usize, -1.0f64), |best, i| {
            let d = ring[0].dist(ring[i]);
            if d > best.1 {
                (i, d)
            } else {
                best
            }
        })
        .0;
    let at = |i: usize| ring[i % n];
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let mut stack = vec![(0usize, far), (far, n)];
    while let Some((i, j)) = stack.pop() {
        if j <= i + 1 {
            continue;
        }
        let (a, b) = (at(i), at(j));
        let mut best = (0usize, -1.0f64);
        for k in i + 1..j {
            let d = point_segment_distance(at(k), a, b);
            if d > best.1 {
                best = (k, d);
            }
        }
        if best.1 > tol {
            keep[best.0 % n] = true;
            stack.push((i, best.0));
            stack.push((best.0, j));
        }
    }
    let mut kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    if kept.len() < 3 {
        warn!("boundary simplification at tol {tol} collapsed the ring; keeping a 3-vertex hull");
        let third = (1..n)
            .filter(|&i| i != far)
            .fold((0usize, -1.0f64), |best, i| {
                let d = point_segment_distance(ring[i], ring[0], ring[far]);
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            })
            .0;
        kept = vec![0, far, third];
        kept.sort_unstable();
    }
    match Polygon::new(kept.iter().map(|&i| ring[i]).collect()) {
        Ok(q) => q,
        Err(e) => {
            warn!("simplified boundary is degenerate ({e}); keeping the input ring");
            p.clone()
        }
    }
}

/// True when no two non-adjacent edges touch and adjacent edges share only
/// their common vertex.
pub fn polygon_is_simple(p: &Polygon) -> bool {
    ring_is_simple(p.ring())
}

/// [`polygon_is_simple`] for a raw ring that may not satisfy [`Polygon`] invariants.
pub fn ring_is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let seg = |i: usize| (ring[i], ring[(i + 1) % n]);
    if (0..n).any(|i| seg(i).0 == seg(i).1) {
        return false;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| ring[i].x.min(ring[(i + 1) % n].x);
    let max_x = |i: usize| ring[i].x.max(ring[(i + 1) % n].x);
    order.sort_by(|&a, &b| min_x(a).total_cmp(&min_x(b)).then(a.cmp(&b)));
    for (oi, &i) in order.iter().enumerate() {
        let hi = max_x(i);
        for &j in &order[oi + 1..] {
            if min_x(j) > hi {
                break;
            }
            let (a1, a2) = seg(i);
            let (b1, b2) = seg(j);
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                if n == 3 {
                    // a triangle with non-zero edge lengths is simple unless collinear
                    if orient(ring[0], ring[1], ring[2]) == 0.0 {
                        return false;
                    }
                    continue;
                }
                // shared vertex is a2 == b1 or b2 == a1; the far endpoints must not lie on the other edge
                let (far_a, far_b) = if (i + 1) % n == j { (a1, b2) } else { (a2, b1) };
                if (orient(b1, b2, far_a) == 0.0 && on_segment(b1, b2, far_a))
                    || (orient(a1, a2, far_b) == 0.0 && on_segment(a1, a2, far_b))
                {
                    return false;
                }
            } else if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Containment test; points on the boundary count as inside.
pub fn point_in_polygon(q: Point, p: &Polygon) -> bool {
    ring_contains(p.ring(), q)
}

/// [`point_in_polygon`] for a raw ring.
pub fn ring_contains(ring: &[Point], q: Point) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let bb = BBox::from_points(ring).expect("non-empty");
    let eps = 1e-12 * bb.diagonal().max(f64::MIN_POSITIVE);
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if point_segment_distance(q, a, b) <= eps {
            return true;
        }
        if (a.y > q.y) != (b.y > q.y) {
            let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Area of the intersection of `subject` with the convex, counter-clockwise
/// `clip` polygon (Sutherland-Hodgman). Exact for any simple subject.
pub fn clipped_area(subject: &[Point], clip: &[Point]) -> f64 {
    let mut output: Vec<Point> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let cur_in = orient(a, b, cur) >= 0.0;
            let prev_in = orient(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    ring_signed_area(&output).abs()
}

fn line_intersection(p1: Point, p2: Point, a: Point, b: Point) -> Point {
    let d = p2 - p1;
    let e = b - a;
    let denom = d.cross(e);
    if denom == 0.0 {
        return p1;
    }
    let t = (a - p1).cross(e) / denom;
    p1 + d * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).is_err());
        assert!(Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0)
        ])
        .is_err());
        assert!(Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0)
        ])
        .is_err());
        assert!(Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(f64::NAN, 0.0),
            Point::new(0.0, 1.0)
        ])
        .is_err());
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)]);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn centroid_of_square_and_triangle() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(compute_centroid(&sq).unwrap(), Point::new(0.5, 0.5));
        let tri = poly(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]);
        let c = compute_centroid(&tri).unwrap();
        assert_relative_eq!(c.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn centroid_orientation_independent() {
        let cw = poly(&[(0.0, 0.0), (0.0, 2.0), (4.0, 2.0), (4.0, 0.0)]);
        let c = compute_centroid(&cw).unwrap();
        assert_relative_eq!(c.x, 2.0);
        assert_relative_eq!(c.y, 1.0);
    }

    #[test]
    fn simplify_drops_collinear_midpoint() {
        let p = poly(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let s = simplify_boundary(&p, 0.01);
        assert_eq!(s.len(), 4);
        assert!(!s.ring().contains(&Point::new(0.5, 0.0)));
    }

    #[test]
    fn simplify_zero_tolerance_is_identity() {
        let p = poly(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(simplify_boundary(&p, 0.0), p);
    }

    #[test]
    fn simplify_collapse_keeps_three_vertices() {
        let p = poly(&[(0.0, 0.0), (10.0, 0.0), (10.0, 0.1), (0.0, 0.1)]);
        let s = simplify_boundary(&p, 5.0);
        assert_eq!(s.len(), 3);
        assert!(s.area() > 0.0);
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let ring = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(!ring_is_simple(&ring));
        let quad = poly(&[(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (0.0, 1.5)]);
        assert!(polygon_is_simple(&quad));
    }

    #[test]
    fn repeated_vertex_and_backtrack_are_not_simple() {
        // figure eight touching at (1,1)
        let ring = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 2.0),
        ];
        assert!(!ring_is_simple(&ring));
        // spike doubling back over the previous edge
        let spike = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
        ];
        assert!(!ring_is_simple(&spike));
    }

    #[test]
    fn containment_with_boundary_rule() {
        let sq = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!(point_in_polygon(Point::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(2.0, 2.0), &sq));
        assert!(point_in_polygon(Point::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(Point::new(0.0, 0.0), &sq));
    }

    #[test]
    fn clipping_square_against_square() {
        let subject = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let clip = Polygon::square(Point::new(0.5, 0.0), 1.0);
        assert_relative_eq!(
            clipped_area(subject.ring(), clip.ring()),
            0.5,
            epsilon = 1e-15
        );
        let far = Polygon::square(Point::new(5.0, 5.0), 1.0);
        assert_eq!(clipped_area(subject.ring(), far.ring()), 0.0);
    }

    #[test]
    fn clipping_concave_subject() {
        // L shape, clip the notch cell: the intersection is empty
        let l = poly(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ]);
        let notch = Polygon::square(Point::new(1.0, 1.0), 1.0);
        assert_relative_eq!(clipped_area(l.ring(), notch.ring()), 0.0, epsilon = 1e-15);
        let big = Polygon::square(Point::new(-1.0, -1.0), 10.0);
        assert_relative_eq!(clipped_area(l.ring(), big.ring()), 3.0, epsilon = 1e-14);
    }
}
