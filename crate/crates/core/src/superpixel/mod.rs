//! Hyperspectral SLIC over-segmentation and map-guided superpixel merging.
//!
//! Superpixels are the documents of the topic model: each one is a spatially
//! contiguous group of pixels whose memberships share a Dirichlet mean.

mod connectivity;
mod merge;
mod slic;

pub use connectivity::{enforce_connectivity, is_four_connected};
pub use merge::{merge_by_polygons, MergeReport};
pub use slic::{grid_step, init_centers, segment, slic_distance, Center, SlicParams, SlicState};

use crate::error::{Error, Result};

/// A partition of the image pixels into `C` superpixels labelled `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Segmentation {
    /// Build from a label grid whose ids are exactly `0..C` (every id used).
    pub fn from_labels(rows: usize, cols: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != rows * cols || labels.is_empty() {
            return Err(Error::Segmentation(format!(
                "{} labels for a {rows}x{cols} image",
                labels.len()
            )));
        }
        let c = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut members = vec![Vec::new(); c];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::Segmentation(format!(
                "superpixel id {empty} is unused; ids must be 0..{c} without gaps"
            )));
        }
        Ok(Self {
            rows,
            cols,
            labels,
            members,
        })
    }

    /// Renumber arbitrary ids to `0..C`, preserving their relative order.
    pub fn compacted(rows: usize, cols: usize, labels: &[usize]) -> Self {
        let max = labels.iter().max().copied().unwrap_or(0);
        let mut used = vec![false; max + 1];
        for &l in labels {
            used[l] = true;
        }
        let mut remap = vec![usize::MAX; max + 1];
        let mut next = 0;
        for (old, u) in used.iter().enumerate() {
            if *u {
                remap[old] = next;
                next += 1;
            }
        }
        let labels = labels.iter().map(|&l| remap[l]).collect();
        Self::from_labels(rows, cols, labels).expect("compacted labels are gap-free")
    }

    /// One superpixel per rectangular tile of `tile_rows x tile_cols` pixels,
    /// numbered in raster order of tiles.
    pub fn tiles(rows: usize, cols: usize, tile_rows: usize, tile_cols: usize) -> Result<Self> {
        if tile_rows == 0 || tile_cols == 0 {
            return Err(Error::Segmentation("tile size must be positive".into()));
        }
        let tiles_across = cols.div_ceil(tile_cols);
        let labels = (0..rows * cols)
            .map(|i| (i / cols / tile_rows) * tiles_across + (i % cols) / tile_cols)
            .collect();
        Self::from_labels(rows, cols, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_pixels(&self) -> usize {
        self.labels.len()
    }

    pub fn n_superpixels(&self) -> usize {
        self.members.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_at(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.cols + col]
    }

    /// Pixel indices of each superpixel, ascending.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_are_rejected_and_compaction_fills_them() {
        assert!(Segmentation::from_labels(1, 3, vec![0, 2, 2]).is_err());
        let seg = Segmentation::compacted(1, 3, &[0, 5, 5]);
        assert_eq!(seg.labels(), &[0, 1, 1]);
        assert_eq!(seg.members(), &[vec![0], vec![1, 2]]);
    }

    #[test]
    fn tiles_cover_ragged_edges() {
        let seg = Segmentation::tiles(5, 5, 2, 3).unwrap();
        assert_eq!(seg.n_superpixels(), 6);
        assert_eq!(seg.label_at(4, 4), 5);
        assert_eq!(seg.members().iter().map(Vec::len).sum::<usize>(), 25);
    }
}
