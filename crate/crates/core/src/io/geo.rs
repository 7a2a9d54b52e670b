use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Affine pixel → world mapping in GDAL coefficient order:
///
/// ```text
/// x = c[0] + col * c[1] + row * c[2]
/// y = c[3] + col * c[4] + row * c[5]
/// ```
///
/// `(col, row)` are continuous pixel coordinates with the upper-left corner of
/// the image at `(0, 0)`; the center of pixel `(i, j)` is `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geotransform(pub [f64; 6]);

impl Geotransform {
    pub const IDENTITY: Geotransform = Geotransform([0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);

    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        let c = &self.0;
        (c[0] + col * c[1] + row * c[2], c[3] + col * c[4] + row * c[5])
    }

    pub fn world_to_pixel(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let c = &self.0;
        let det = c[1] * c[5] - c[2] * c[4];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::GeoAlign(format!(
                "geotransform {:?} is singular (determinant {det})",
                self.0
            )));
        }
        let (dx, dy) = (x - c[0], y - c[3]);
        Ok(((c[5] * dx - c[2] * dy) / det, (c[1] * dy - c[4] * dx) / det))
    }

    /// Parse a world file: six lines `A D B E C F`, where `(C, F)` is the
    /// world position of the *center* of the upper-left pixel.
    pub fn from_world_file_text(text: &str) -> Result<Self> {
        let v = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::GeoAlign(format!("world file value '{t}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let [a, d, b, e, c, f]: [f64; 6] = v
            .try_into()
            .map_err(|v: Vec<f64>| Error::GeoAlign(format!("world file needs 6 numbers, found {}", v.len())))?;
        Ok(Geotransform([c - 0.5 * a - 0.5 * b, a, b, f - 0.5 * d - 0.5 * e, d, e]))
    }

    pub fn to_world_file_text(&self) -> String {
        let [_, a, b, _, d, e] = self.0;
        let (c, f) = self.pixel_to_world(0.5, 0.5);
        format!("{a}\n{d}\n{b}\n{e}\n{c}\n{f}\n")
    }
}

pub fn load_geotransform(path: &Path) -> Result<Geotransform> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Geotransform::from_world_file_text(&text).map_err(|e| e.in_file(path))
}

pub fn write_geotransform(gt: &Geotransform, path: &Path) -> Result<()> {
    fs::write(path, gt.to_world_file_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        assert_eq!(Geotransform::IDENTITY.world_to_pixel(5.0, 7.0).unwrap(), (5.0, 7.0));
    }

    #[test]
    fn pure_scale() {
        let gt = Geotransform([0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(gt.world_to_pixel(10.0, 4.0).unwrap(), (5.0, 2.0));
    }

    #[test]
    fn zero_scale_is_singular() {
        let gt = Geotransform([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(gt.world_to_pixel(1.0, 1.0), Err(Error::GeoAlign(_))));
    }

    #[test]
    fn world_file_round_trip() {
        let gt = Geotransform([500000.0, 1.3, 0.0, 4200000.0, 0.0, -1.3]);
        let back = Geotransform::from_world_file_text(&gt.to_world_file_text()).unwrap();
        for (a, b) in gt.0.iter().zip(back.0.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn inverse_composes_to_identity(
            ox in -1e3..1e3f64, oy in -1e3..1e3f64,
            a in 0.1..10.0f64, e in -10.0..-0.1f64,
            b in -0.5..0.5f64, d in -0.5..0.5f64,
            col in 0.0..500.0f64, row in 0.0..500.0f64,
        ) {
            let gt = Geotransform([ox, a, b, oy, d, e]);
            let (x, y) = gt.pixel_to_world(col, row);
            let (c2, r2) = gt.world_to_pixel(x, y).unwrap();
            prop_assert!((c2 - col).abs() < 1e-9 && (r2 - row).abs() < 1e-9);
        }
    }
}
