use rayon::prelude::*;

use super::{enforce_connectivity, Segmentation};
use crate::error::{Error, Result};
use crate::io::HsiCube;

#[derive(Debug, Clone, PartialEq)]
pub struct SlicParams {
    /// Requested number of superpixels.
    pub k_target: usize,
    /// Spatial scaling factor `m`; the spatial term is weighted by `m / S`.
    pub m: f64,
    pub max_iters: usize,
    /// Stop once no center moves further than this (pixel units).
    pub move_tol: f64,
    /// Odd side length of the gradient search window used to perturb seeds.
    pub perturb_window: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            k_target: 500,
            m: 20.0,
            max_iters: 10,
            move_tol: 1e-3,
            perturb_window: 3,
        }
    }
}

impl SlicParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_target == 0 {
            return Err(Error::Segmentation("superpixel count must be at least 1".into()));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Segmentation(format!(
                "scaling factor m must be > 0, got {}",
                self.m
            )));
        }
        if self.perturb_window.is_multiple_of(2) {
            return Err(Error::Segmentation(format!(
                "perturbation window must be odd, got {}",
                self.perturb_window
            )));
        }
        if !(self.move_tol >= 0.0) {
            return Err(Error::Segmentation("move tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Grid interval `S = round(sqrt(pixels / k_target))`.
pub fn grid_step(n_pixels: usize, k_target: usize) -> usize {
    ((n_pixels as f64 / k_target as f64).sqrt()).round() as usize
}

/// A cluster center: mean spectrum plus fractional (row, col) position.
#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    pub spectrum: Vec<f64>,
    pub row: f64,
    pub col: f64,
}

/// Combined SLIC distance `d_spectral + (m / S) * d_spatial`, where the
/// spectral term is the summed squared band difference and the spatial term
/// is the Euclidean pixel distance.
pub fn slic_distance(spectrum: &[f64], row: f64, col: f64, center: &Center, m: f64, step: f64) -> Result<f64> {
    if spectrum.len() != center.spectrum.len() {
        return Err(Error::DataFormat(format!(
            "pixel has {} bands but center has {}",
            spectrum.len(),
            center.spectrum.len()
        )));
    }
    Ok(distance(spectrum, row, col, center, m / step))
}

#[inline]
fn distance(spectrum: &[f64], row: f64, col: f64, center: &Center, weight: f64) -> f64 {
    let spectral: f64 = spectrum
        .iter()
        .zip(&center.spectrum)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let spatial = ((row - center.row).powi(2) + (col - center.col).powi(2)).sqrt();
    spectral + weight * spatial
}

fn gradient(cube: &HsiCube, r: usize, c: usize) -> f64 {
    let (rows, cols) = (cube.rows(), cube.cols());
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let horiz = sq(
        cube.pixel_at(r, (c + 1).min(cols - 1)),
        cube.pixel_at(r, c.saturating_sub(1)),
    );
    let vert = sq(
        cube.pixel_at((r + 1).min(rows - 1), c),
        cube.pixel_at(r.saturating_sub(1), c),
    );
    horiz + vert
}

/// Seed centers on a regular grid of step `S`, then move each to the lowest
/// gradient pixel of its `n x n` neighbourhood. A seed only moves when some
/// neighbour is strictly lower than the pixel under it.
pub fn init_centers(cube: &HsiCube, params: &SlicParams) -> Result<Vec<Center>> {
    params.validate()?;
    let step = grid_step(cube.n_pixels(), params.k_target);
    if step == 0 {
        return Err(Error::Segmentation(format!(
            "{}x{} image is smaller than one grid cell for {} superpixels",
            cube.rows(),
            cube.cols(),
            params.k_target
        )));
    }
    let axis = |len: usize| -> Vec<f64> {
        let count = ((len as f64 / step as f64).round() as usize).max(1);
        (0..count)
            .map(|i| (i as f64 + 0.5) * len as f64 / count as f64)
            .collect()
    };
    let half = (params.perturb_window / 2) as isize;
    let mut centers = Vec::new();
    for &row in &axis(cube.rows()) {
        for &col in &axis(cube.cols()) {
            let (br, bc) = (row.floor() as usize, col.floor() as usize);
            let mut best = (gradient(cube, br, bc), br, bc);
            for dr in -half..=half {
                for dc in -half..=half {
                    let (r, c) = (br as isize + dr, bc as isize + dc);
                    if r < 0 || c < 0 || r >= cube.rows() as isize || c >= cube.cols() as isize {
                        continue;
                    }
                    let g = gradient(cube, r as usize, c as usize);
                    if g < best.0 {
                        best = (g, r as usize, c as usize);
                    }
                }
            }
            let (_, r, c) = best;
            let (row, col) = if (r, c) == (br, bc) {
                (row, col)
            } else {
                (r as f64, c as f64)
            };
            centers.push(Center {
                spectrum: cube.pixel_at(r, c).to_vec(),
                row,
                col,
            });
        }
    }
    Ok(centers)
}

/// Iteration state of the clustering, exposed so callers can step through
/// assignment and update passes.
#[derive(Debug, Clone)]
pub struct SlicState<'a> {
    cube: &'a HsiCube,
    step: f64,
    weight: f64,
    pub centers: Vec<Center>,
    /// Current center index per pixel; `None` before the first assignment.
    pub labels: Option<Vec<usize>>,
    buckets: Vec<Vec<usize>>,
    bucket_rows: usize,
    bucket_cols: usize,
}

impl<'a> SlicState<'a> {
    pub fn new(cube: &'a HsiCube, params: &SlicParams) -> Result<Self> {
        let centers = init_centers(cube, params)?;
        let step = grid_step(cube.n_pixels(), params.k_target) as f64;
        let bucket_rows = (cube.rows() as f64 / step).ceil() as usize + 1;
        let bucket_cols = (cube.cols() as f64 / step).ceil() as usize + 1;
        let mut state = Self {
            cube,
            step,
            weight: params.m / step,
            centers,
            labels: None,
            buckets: Vec::new(),
            bucket_rows,
            bucket_cols,
        };
        state.rebuild_buckets();
        Ok(state)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn rebuild_buckets(&mut self) {
        let mut buckets = vec![Vec::new(); self.bucket_rows * self.bucket_cols];
        for (k, c) in self.centers.iter().enumerate() {
            let br = ((c.row / self.step).floor().max(0.0) as usize).min(self.bucket_rows - 1);
            let bc = ((c.col / self.step).floor().max(0.0) as usize).min(self.bucket_cols - 1);
            buckets[br * self.bucket_cols + bc].push(k);
        }
        self.buckets = buckets;
    }

    fn pixel_distance(&self, pixel: usize, k: usize) -> f64 {
        let cols = self.cube.cols();
        let (r, c) = ((pixel / cols) as f64, (pixel % cols) as f64);
        distance(self.cube.pixel(pixel), r, c, &self.centers[k], self.weight)
    }

    /// `Σ_i d(x_i, c_label(i))` under the current centers.
    pub fn objective(&self, labels: &[usize]) -> f64 {
        labels.iter().enumerate().map(|(i, &k)| self.pixel_distance(i, k)).sum()
    }

    fn assign_pixel(&self, pixel: usize, previous: Option<usize>) -> usize {
        let cols = self.cube.cols();
        let (r, c) = ((pixel / cols) as f64, (pixel % cols) as f64);
        let s = self.step;
        let mut best: Option<(f64, usize)> = None;
        let consider = |k: usize, best: &mut Option<(f64, usize)>| {
            let d = self.pixel_distance(pixel, k);
            match *best {
                Some((bd, bk)) if d > bd || (d == bd && k >= bk) => {}
                _ => *best = Some((d, k)),
            }
        };
        let lo_r = ((r - s) / s).floor().max(0.0) as usize;
        let hi_r = (((r + s) / s).floor() as usize).min(self.bucket_rows - 1);
        let lo_c = ((c - s) / s).floor().max(0.0) as usize;
        let hi_c = (((c + s) / s).floor() as usize).min(self.bucket_cols - 1);
        for br in lo_r..=hi_r {
            for bc in lo_c..=hi_c {
                for &k in &self.buckets[br * self.bucket_cols + bc] {
                    let ctr = &self.centers[k];
                    if (ctr.row - r).abs() <= s && (ctr.col - c).abs() <= s {
                        consider(k, &mut best);
                    }
                }
            }
        }
        if let Some(k) = previous {
            consider(k, &mut best);
        }
        match best {
            Some((_, k)) => k,
            // Reached by no window: fall back to the globally nearest center.
            None => {
                (0..self.centers.len())
                    .map(|k| (self.pixel_distance(pixel, k), k))
                    .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
                    .1
            }
        }
    }

    /// Assign each pixel to the nearest center whose `2S x 2S` window covers
    /// it; the pixel's previous center is always a candidate. Returns the
    /// objective of the new labeling.
    pub fn assign(&mut self) -> f64 {
        let prev = self.labels.take();
        let labels: Vec<usize> = (0..self.cube.n_pixels())
            .into_par_iter()
            .map(|i| self.assign_pixel(i, prev.as_ref().map(|p| p[i])))
            .collect();
        let obj = self.objective(&labels);
        self.labels = Some(labels);
        obj
    }

    /// Move each center to the mean spectrum and position of its pixels.
    /// Returns the largest spatial displacement. Empty clusters stay put.
    pub fn update_centers(&mut self) -> f64 {
        let Some(labels) = &self.labels else {
            return 0.0;
        };
        let bands = self.cube.bands();
        let cols = self.cube.cols();
        let k = self.centers.len();
        let mut sums = vec![0.0; k * bands];
        let mut pos = vec![(0.0, 0.0); k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            pos[l].0 += (i / cols) as f64;
            pos[l].1 += (i % cols) as f64;
            for (s, v) in sums[l * bands..(l + 1) * bands].iter_mut().zip(self.cube.pixel(i)) {
                *s += v;
            }
        }
        let mut moved: f64 = 0.0;
        for (j, center) in self.centers.iter_mut().enumerate() {
            if counts[j] == 0 {
                continue;
            }
            let n = counts[j] as f64;
            let (row, col) = (pos[j].0 / n, pos[j].1 / n);
            moved = moved.max(((row - center.row).powi(2) + (col - center.col).powi(2)).sqrt());
            center.row = row;
            center.col = col;
            for (c, s) in center.spectrum.iter_mut().zip(&sums[j * bands..(j + 1) * bands]) {
                *c = s / n;
            }
        }
        self.rebuild_buckets();
        moved
    }
}

/// Hyperspectral SLIC: alternate assignment and center updates until no
/// center moves more than `move_tol` or `max_iters` passes ran, then make
/// every superpixel 4-connected.
pub fn segment(cube: &HsiCube, params: &SlicParams) -> Result<Segmentation> {
    let mut state = SlicState::new(cube, params)?;
    for _ in 0..params.max_iters.max(1) {
        state.assign();
        if state.update_centers() < params.move_tol {
            break;
        }
    }
    let labels = state.labels.expect("at least one assignment pass ran");
    let seg = Segmentation::compacted(cube.rows(), cube.cols(), &labels);
    Ok(enforce_connectivity(&seg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(rows: usize, cols: usize) -> HsiCube {
        HsiCube::new(rows, cols, 2, [0.6, 0.8].repeat(rows * cols)).unwrap()
    }

    #[test]
    fn grid_layout_ten_by_ten() {
        let params = SlicParams {
            k_target: 4,
            ..Default::default()
        };
        let centers = init_centers(&constant(10, 10), &params).unwrap();
        let pos: Vec<(f64, f64)> = centers.iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(pos, vec![(2.5, 2.5), (2.5, 7.5), (7.5, 2.5), (7.5, 7.5)]);
    }

    #[test]
    fn tiny_image_many_superpixels_fails() {
        let params = SlicParams {
            k_target: 100,
            ..Default::default()
        };
        assert!(matches!(
            init_centers(&constant(2, 2), &params),
            Err(Error::Segmentation(_))
        ));
    }

    #[test]
    fn perturbation_moves_seed_off_an_edge() {
        // Vertical edge between columns 1 and 2: columns 1 and 2 carry the
        // gradient, so the seed under (2, 2) moves to column 3.
        let mut data = Vec::new();
        for _r in 0..5 {
            for c in 0..5 {
                data.extend(if c < 2 { [1.0, 0.0] } else { [0.0, 1.0] });
            }
        }
        let cube = HsiCube::new(5, 5, 2, data).unwrap();
        let params = SlicParams {
            k_target: 1,
            ..Default::default()
        };
        let c = &init_centers(&cube, &params).unwrap()[0];
        // First strictly-lower pixel in scan order of the 3x3 window.
        assert_eq!((c.row, c.col), (1.0, 3.0));
        assert_eq!(c.spectrum, vec![0.0, 1.0]);
    }

    #[test]
    fn distance_hand_cases() {
        let center = Center {
            spectrum: vec![0.5, 0.5],
            row: 0.0,
            col: 0.0,
        };
        assert_eq!(slic_distance(&[0.5, 0.5], 0.0, 0.0, &center, 20.0, 10.0).unwrap(), 0.0);
        assert!((slic_distance(&[0.5, 0.5], 3.0, 4.0, &center, 20.0, 10.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((slic_distance(&[0.6, 0.7], 0.0, 0.0, &center, 20.0, 10.0).unwrap() - 0.05).abs() < 1e-12);
        assert!(matches!(
            slic_distance(&[0.5], 0.0, 0.0, &center, 20.0, 10.0),
            Err(Error::DataFormat(_))
        ));
    }
}
