//! Raster, polygon and pipeline file formats.

mod cube;
mod geo;
pub mod pgm;
mod polygons;
pub mod tables;

pub use cube::{envi_paths, load_cube, preprocess_unit_norm, write_cube, CubeFormat, HsiCube, Interleave, Normalized};
pub use geo::{load_geotransform, write_geotransform, Geotransform};
pub use polygons::{load_polygons, parse_geojson, Polygon, PolygonSet, Ring};
