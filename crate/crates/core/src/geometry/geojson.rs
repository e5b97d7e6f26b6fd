//! Minimal GeoJSON reader: a FeatureCollection of Polygon (or MultiPolygon)
//! features carrying an `id` or `name` property.

use std::collections::BTreeSet;
use std::io::Read;

use log::warn;
use serde_json::{json, Value};

use super::{Point, Polygon, Region, RegionSet};
use crate::error::{Error, Result};

pub fn load_regions<R: Read>(source: R) -> Result<RegionSet> {
    load_regions_with_boundary(source, None::<&[u8]>)
}

/// Reads regions and, if given, an explicit boundary that overrides the
/// derived outline.
pub fn load_regions_with_boundary<R: Read, B: Read>(
    source: R,
    boundary: Option<B>,
) -> Result<RegionSet> {
    let doc: Value = serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    let regions = parse_regions(&doc)?;
    let boundary = boundary.map(load_boundary).transpose()?;
    RegionSet::new(regions, boundary)
}

/// First polygon found in a FeatureCollection, Feature or bare geometry.
pub fn load_boundary<R: Read>(source: R) -> Result<Polygon> {
    let doc: Value = serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    let geometry = match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .and_then(|f| f.first())
            .and_then(|f| f.get("geometry"))
            .ok_or_else(|| Error::Parse("boundary collection has no features".into()))?,
        Some("Feature") => doc
            .get("geometry")
            .ok_or_else(|| Error::Parse("boundary feature has no geometry".into()))?,
        _ => &doc,
    };
    parse_geometry(geometry, "boundary")
}

/// FeatureCollection with one Polygon feature per region, `properties.id`
/// holding the region id. Rings are closed and counter-clockwise.
pub fn regions_to_geojson(regions: &[Region]) -> Value {
    let features: Vec<Value> = regions
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "properties": { "id": r.id },
                "geometry": polygon_geometry(&r.polygon),
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// GeoJSON Polygon geometry for a single ring.
pub fn polygon_geometry(polygon: &Polygon) -> Value {
    let ccw = polygon.to_ccw();
    let mut ring: Vec<[f64; 2]> = ccw.ring().iter().map(|p| [p.x, p.y]).collect();
    ring.push(ring[0]);
    json!({ "type": "Polygon", "coordinates": [ring] })
}

fn parse_regions(doc: &Value) -> Result<Vec<Region>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Parse("expected a GeoJSON FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("FeatureCollection without a features array".into()))?;
    let mut ids = BTreeSet::new();
    let mut regions = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        let id = feature_id(feature).ok_or_else(|| {
            Error::Validation(format!("feature {i} has no string `id` or `name` property"))
        })?;
        if !ids.insert(id.clone()) {
            return Err(Error::Validation(format!("duplicate region id '{id}'")));
        }
        let geometry = feature
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| Error::Parse(format!("feature '{id}' has no geometry")))?;
        regions.push(Region::new(id.clone(), parse_geometry(geometry, &id)?));
    }
    Ok(regions)
}

fn feature_id(feature: &Value) -> Option<String> {
    let props = feature.get("properties");
    let candidates = [
        props.and_then(|p| p.get("id")),
        props.and_then(|p| p.get("name")),
        feature.get("id"),
    ];
    candidates.into_iter().flatten().find_map(|v| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

fn parse_geometry(geometry: &Value, id: &str) -> Result<Polygon> {
    let coords = geometry
        .get("coordinates")
        .ok_or_else(|| Error::Parse(format!("geometry of '{id}' has no coordinates")))?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("Polygon") => parse_polygon(coords, id),
        Some("MultiPolygon") => {
            let parts = coords
                .as_array()
                .ok_or_else(|| Error::Parse(format!("MultiPolygon '{id}' is not an array")))?;
            let polys = parts
                .iter()
                .map(|p| parse_polygon(p, id))
                .collect::<Result<Vec<_>>>()?;
            if polys.len() > 1 {
                warn!(
                    "region '{id}' is a MultiPolygon with {} parts; keeping the largest",
                    polys.len()
                );
            }
            polys
                .into_iter()
                .max_by(|a, b| a.area().total_cmp(&b.area()))
                .ok_or_else(|| Error::Parse(format!("MultiPolygon '{id}' is empty")))
        }
        Some(other) => Err(Error::Parse(format!(
            "region '{id}' has unsupported geometry type {other}"
        ))),
        None => Err(Error::Parse(format!("geometry of '{id}' has no type"))),
    }
}

fn parse_polygon(coords: &Value, id: &str) -> Result<Polygon> {
    let rings = coords
        .as_array()
        .ok_or_else(|| Error::Parse(format!("polygon '{id}' coordinates are not an array")))?;
    match rings.len() {
        0 => Err(Error::Parse(format!("polygon '{id}' has no rings"))),
        1 => {
            let ring = parse_ring(&rings[0], id)?;
            Polygon::from_ring_dedup(ring)
        }
        n => Err(Error::UnsupportedTopology(format!(
            "polygon '{id}' has {} interior ring(s); holes are not supported",
            n - 1
        ))),
    }
}

fn parse_ring(ring: &Value, id: &str) -> Result<Vec<Point>> {
    ring.as_array()
        .ok_or_else(|| Error::Parse(format!("ring of '{id}' is not an array")))?
        .iter()
        .map(|pos| {
            let xy = pos
                .as_array()
                .filter(|a| a.len() >= 2)
                .ok_or_else(|| Error::Parse(format!("bad position in '{id}': expected [x, y]")))?;
            match (xy[0].as_f64(), xy[1].as_f64()) {
                (Some(x), Some(y)) => Ok(Point::new(x, y)),
                _ => Err(Error::Parse(format!("non-numeric coordinate in '{id}'"))),
            }
        })
        .collect()
}
