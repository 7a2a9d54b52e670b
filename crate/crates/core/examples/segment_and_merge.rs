// Over-segment an image with hyperspectral SLIC, then merge the superpixels
// that fall under the same map polygon.

use spmlda::io::{parse_geojson, HsiCube};
use spmlda::superpixel::{is_four_connected, merge_by_polygons, segment, SlicParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Left half has one spectrum, right half another.
    let (rows, cols, bands) = (24, 32, 4);
    let mut data = Vec::with_capacity(rows * cols * bands);
    for _r in 0..rows {
        for c in 0..cols {
            let px = if c < cols / 2 {
                [0.9, 0.1, 0.1, 0.2]
            } else {
                [0.1, 0.2, 0.9, 0.7]
            };
            data.extend(px);
        }
    }
    let cube = HsiCube::new(rows, cols, bands, data)?;

    let params = SlicParams {
        k_target: 12,
        ..SlicParams::default()
    };
    let seg = segment(&cube, &params)?;
    println!(
        "{} superpixels, 4-connected: {}",
        seg.n_superpixels(),
        is_four_connected(&seg)
    );

    // Without a geotransform, polygon coordinates are (column, row) pixel
    // units with pixel centers at half-integers.
    let polygons = parse_geojson(
        r#"{"type": "FeatureCollection", "features": [
          {"type": "Feature", "properties": {"class_tag": "meadow"},
           "geometry": {"type": "Polygon", "coordinates": [[[0,0],[16,0],[16,24],[0,24],[0,0]]]}},
          {"type": "Feature", "properties": {"class_tag": "roof"},
           "geometry": {"type": "Polygon", "coordinates": [[[16,0],[32,0],[32,24],[16,24],[16,0]]]}}
        ]}"#,
    )?;
    let (merged, report) = merge_by_polygons(&seg, &polygons, None)?;
    println!("{} superpixels after merging", merged.n_superpixels());
    for (tag, ids) in &report {
        println!("{tag}: {ids:?}");
    }
    Ok(())
}
