use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

/// A closed ring; the first vertex is repeated at the end.
pub type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub class_tag: String,
    /// Outer boundary first, then holes. Inside-ness uses the even-odd rule
    /// across all rings.
    pub rings: Vec<Ring>,
}

impl Polygon {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ring in &self.rings {
            for w in ring.windows(2) {
                let ([xi, yi], [xj, yj]) = (w[0], w[1]);
                if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolygonSet {
    pub polygons: Vec<Polygon>,
}

impl PolygonSet {
    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }
}

/// Load `Polygon` and `MultiPolygon` features from a GeoJSON file. Every
/// feature needs a string `class_tag` property; each part of a MultiPolygon
/// becomes its own entry.
pub fn load_polygons(path: &Path) -> Result<PolygonSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_geojson(&text).map_err(|e| e.in_file(path))
}

pub fn parse_geojson(text: &str) -> Result<PolygonSet> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::DataFormat(format!("invalid GeoJSON: {e}")))?;
    let features: Vec<&Value> = match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::DataFormat("FeatureCollection without 'features' array".into()))?
            .iter()
            .collect(),
        Some("Feature") => vec![&root],
        other => {
            return Err(Error::DataFormat(format!(
                "expected Feature or FeatureCollection, found {other:?}"
            )))
        }
    };

    let mut set = PolygonSet::default();
    for (i, feature) in features.into_iter().enumerate() {
        let tag = feature
            .get("properties")
            .and_then(|p| p.get("class_tag"))
            .and_then(Value::as_str)
            .ok_or_else(|| Error::LabelSchema(format!("feature {i} has no string 'class_tag' property")))?;
        let geom = feature
            .get("geometry")
            .ok_or_else(|| Error::DataFormat(format!("feature {i} has no geometry")))?;
        let coords = geom
            .get("coordinates")
            .ok_or_else(|| Error::DataFormat(format!("feature {i} geometry has no coordinates")))?;
        let parts: Vec<&Value> = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![coords],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| Error::DataFormat(format!("feature {i}: MultiPolygon coordinates not an array")))?
                .iter()
                .collect(),
            other => {
                return Err(Error::DataFormat(format!(
                    "feature {i}: unsupported geometry type {other:?}"
                )))
            }
        };
        for part in parts {
            let rings = parse_polygon_rings(part).map_err(|e| match e {
                Error::DataFormat(m) => Error::DataFormat(format!("feature {i}: {m}")),
                e => e,
            })?;
            set.polygons.push(Polygon {
                class_tag: tag.to_string(),
                rings,
            });
        }
    }
    Ok(set)
}

fn parse_polygon_rings(v: &Value) -> Result<Vec<Ring>> {
    let rings = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::DataFormat("polygon needs at least one ring".into()))?;
    rings
        .iter()
        .map(|ring| {
            let pts = ring
                .as_array()
                .ok_or_else(|| Error::DataFormat("ring is not an array".into()))?
                .iter()
                .map(|p| match p.as_array().map(Vec::as_slice) {
                    Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok([x, y]),
                        _ => Err(Error::DataFormat("non-numeric coordinate".into())),
                    },
                    _ => Err(Error::DataFormat("position needs two coordinates".into())),
                })
                .collect::<Result<Ring>>()?;
            if pts.len() < 4 {
                return Err(Error::DataFormat(format!(
                    "ring has {} positions; a closed ring needs at least 4",
                    pts.len()
                )));
            }
            if pts.first() != pts.last() {
                return Err(Error::DataFormat("ring is not closed".into()));
            }
            Ok(pts)
        })
        .collect()
}
