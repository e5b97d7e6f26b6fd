//! Deterministic synthetic maps for tests, examples and benchmarks.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{Point, Polygon, Region, RegionSet};

/// `cols × rows` unit squares with ids `r{row}c{col}`, row 0 at the bottom.
pub fn tiling(cols: usize, rows: usize) -> Vec<Region> {
    let mut regions = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            regions.push(Region::new(
                format!("r{r}c{c}"),
                Polygon::square(Point::new(c as f64, r as f64), 1.0),
            ));
        }
    }
    regions
}

/// A `k × k` unit tiling whose centroids are displaced uniformly within a disc
/// of radius `amplitude` (in grid units, the grid size being 1).
pub fn perturbed_lattice(k: usize, amplitude: f64, seed: u64) -> Result<RegionSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rs = RegionSet::new(tiling(k, k), None)?;
    let centroids = rs
        .centroids()
        .iter()
        .map(|&c| {
            let r = amplitude * rng.random::<f64>().sqrt();
            let t = rng.random::<f64>() * TAU;
            c + Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    rs.with_centroids(centroids)
}

/// Three `20 × 4` strips laid end to end with a 2 × 3 block of `0.5 × 0.5`
/// squares at the far end: a strongly non-uniform map of nine regions whose
/// centroid spacings range from a tenth to about four grid sizes.
pub fn cluster() -> Vec<Region> {
    const LONG: f64 = 20.0;
    const HIGH: f64 = 4.0;
    const SMALL: f64 = 0.5;
    let mut regions = Vec::with_capacity(9);
    for i in 0..3 {
        regions.push(Region::new(
            format!("large{i}"),
            Polygon::rect(
                Point::new(LONG * i as f64, 0.0),
                Point::new(LONG * (i + 1) as f64, HIGH),
            ),
        ));
    }
    for r in 0..3 {
        for c in 0..2 {
            regions.push(Region::new(
                format!("small{r}{c}"),
                Polygon::square(
                    Point::new(3.0 * LONG + SMALL * c as f64, SMALL * r as f64),
                    SMALL,
                ),
            ));
        }
    }
    regions
}

/// A `k × k` unit tiling whose outer edges are each split into `detail`
/// segments and displaced by a smooth wiggle, giving about `4·k·detail`
/// boundary vertices for simplification experiments.
pub fn wiggly_tiling(k: usize, detail: usize) -> Vec<Region> {
    let detail = detail.max(1);
    let kf = k as f64;
    let wiggle = |t: f64, seed: f64| 0.12 * (PI * t).sin() * (3.0 * PI * t + seed).sin();
    let mut regions = Vec::with_capacity(k * k);
    for r in 0..k {
        for c in 0..k {
            let (x0, y0) = (c as f64, r as f64);
            let corners = [
                Point::new(x0, y0),
                Point::new(x0 + 1.0, y0),
                Point::new(x0 + 1.0, y0 + 1.0),
                Point::new(x0, y0 + 1.0),
            ];
            let mut ring = Vec::new();
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                let mid = (a + b) / 2.0;
                let outer = match e {
                    0 => mid.y == 0.0,
                    1 => mid.x == kf,
                    2 => mid.y == kf,
                    _ => mid.x == 0.0,
                };
                ring.push(a);
                if outer {
                    let dir = b - a;
                    let normal = Point::new(dir.y, -dir.x);
                    let seed = (r * k + c + e) as f64;
                    for i in 1..detail {
                        let t = i as f64 / detail as f64;
                        ring.push(a + dir * t + normal * wiggle(t, seed));
                    }
                }
            }
            regions.push(Region::new(
                format!("r{r}c{c}"),
                Polygon::new(ring).expect("wiggly cell is a valid polygon"),
            ));
        }
    }
    regions
}
