use std::collections::{BTreeMap, BTreeSet};

use super::Segmentation;
use crate::error::Result;
use crate::io::{Geotransform, PolygonSet};

/// Post-merge superpixel ids touched by each polygon class. A class whose
/// polygons fall outside the image maps to an empty set.
pub type MergeReport = BTreeMap<String, BTreeSet<usize>>;

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower id becomes the root so results do not depend on call order.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Superpixels containing at least one pixel center inside `poly`.
fn touched(seg: &Segmentation, poly: &crate::io::Polygon, gt: &Geotransform) -> Result<BTreeSet<usize>> {
    let (rows, cols) = (seg.rows() as f64, seg.cols() as f64);
    // Bounding box in pixel space from the transformed vertices.
    let (mut r0, mut r1, mut c0, mut c1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &[x, y] in poly.rings.iter().flatten() {
        let (c, r) = gt.world_to_pixel(x, y)?;
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    let mut out = BTreeSet::new();
    let lo = |v: f64, max: f64| (v - 0.5).ceil().clamp(0.0, max) as usize;
    let hi = |v: f64, max: f64| ((v - 0.5).floor() + 1.0).clamp(0.0, max) as usize;
    for r in lo(r0, rows)..hi(r1, rows) {
        for c in lo(c0, cols)..hi(c1, cols) {
            let (x, y) = gt.pixel_to_world(c as f64 + 0.5, r as f64 + 0.5);
            if poly.contains(x, y) {
                out.insert(seg.label_at(r, c));
            }
        }
    }
    Ok(out)
}

/// Merge every group of superpixels overlapped by one polygon into a single
/// superpixel. Overlaps chain transitively across polygons. Labels are
/// re-compacted in ascending order of each merged group's smallest old id.
/// Polygons are taken in pixel coordinates when `gt` is `None`.
pub fn merge_by_polygons(
    seg: &Segmentation,
    polys: &PolygonSet,
    gt: Option<&Geotransform>,
) -> Result<(Segmentation, MergeReport)> {
    let gt = gt.copied().unwrap_or(Geotransform::IDENTITY);
    let hits = polys
        .polygons
        .iter()
        .map(|p| touched(seg, p, &gt))
        .collect::<Result<Vec<_>>>()?;

    let mut dsu = DisjointSet((0..seg.n_superpixels()).collect());
    for set in &hits {
        if let Some(&first) = set.iter().next() {
            for &other in set {
                dsu.union(first, other);
            }
        }
    }
    let roots: Vec<usize> = (0..seg.n_superpixels()).map(|l| dsu.find(l)).collect();
    let labels: Vec<usize> = seg.labels().iter().map(|&l| roots[l]).collect();
    let merged = Segmentation::compacted(seg.rows(), seg.cols(), &labels);

    // Old label -> new label, read off any member pixel.
    let new_id: Vec<usize> = seg.members().iter().map(|m| merged.labels()[m[0]]).collect();
    let mut report = MergeReport::new();
    for (poly, set) in polys.polygons.iter().zip(&hits) {
        report
            .entry(poly.class_tag.clone())
            .or_default()
            .extend(set.iter().map(|&l| new_id[l]));
    }
    Ok((merged, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Polygon;

    fn square(tag: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon {
            class_tag: tag.into(),
            rings: vec![vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
        }
    }

    fn strips() -> Segmentation {
        // 2 rows x 8 cols, one superpixel per column.
        Segmentation::from_labels(2, 8, (0..16).map(|i| i % 8).collect()).unwrap()
    }

    #[test]
    fn polygon_over_two_superpixels_merges_them() {
        let seg = strips();
        let polys = PolygonSet {
            polygons: vec![square("roof", 3.2, 0.0, 5.8, 2.0)],
        };
        let (out, report) = merge_by_polygons(&seg, &polys, None).unwrap();
        // Centers 3.5, 4.5 and 5.5 fall inside.
        assert_eq!(out.n_superpixels(), 6);
        assert_eq!(out.label_at(0, 3), out.label_at(0, 5));
        assert_eq!(out.label_at(0, 4), out.label_at(0, 3));
        assert_ne!(out.label_at(0, 2), out.label_at(0, 3));
        assert_eq!(report["roof"], BTreeSet::from([3]));
    }

    #[test]
    fn polygon_outside_changes_nothing() {
        let seg = strips();
        let polys = PolygonSet {
            polygons: vec![square("lake", 100.0, 100.0, 110.0, 110.0)],
        };
        let (out, report) = merge_by_polygons(&seg, &polys, None).unwrap();
        assert_eq!(out, seg);
        assert!(report["lake"].is_empty());
    }

    #[test]
    fn world_coordinates_go_through_the_geotransform() {
        let seg = strips();
        // 10 m pixels, north-up, origin at (1000, 500).
        let gt = Geotransform([1000.0, 10.0, 0.0, 500.0, 0.0, -10.0]);
        let polys = PolygonSet {
            polygons: vec![square("roof", 1001.0, 490.0, 1019.0, 480.0)],
        };
        let (out, _) = merge_by_polygons(&seg, &polys, Some(&gt)).unwrap();
        assert_eq!(out.n_superpixels(), 7);
        assert_eq!(out.label_at(0, 0), out.label_at(1, 1));
    }
}
