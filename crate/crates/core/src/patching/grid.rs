use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::entropy::{channel_entropy, EntropyStats};
use super::inventory::PatchRecord;

/// The largest axis-aligned tiling of `patch_size` squares, centered in the image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub artwork_id: String,
    pub patch_size: u32,
    pub n_rows: u32,
    pub n_cols: u32,
    pub origin_x: u32,
    pub origin_y: u32,
}

impl PatchGrid {
    /// Plan the grid for a `width`×`height` image. Images narrower or shorter
    /// than one patch produce an empty grid.
    pub fn plan(artwork_id: impl Into<String>, width: u32, height: u32, patch_size: u32) -> Self {
        assert!(patch_size >= 1, "patch_size must be ≥ 1");
        let n_cols = width / patch_size;
        let n_rows = height / patch_size;
        let origin_x = (width - n_cols * patch_size) / 2;
        let origin_y = (height - n_rows * patch_size) / 2;
        Self {
            artwork_id: artwork_id.into(),
            patch_size,
            n_rows,
            n_cols,
            origin_x,
            origin_y,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0 || self.n_cols == 0
    }

    pub fn len(&self) -> usize {
        (self.n_rows * self.n_cols) as usize
    }

    /// Pixel rectangle `(x0, y0, x1, y1)` of a cell, half-open.
    pub fn rect(&self, row: u32, col: u32) -> (u32, u32, u32, u32) {
        let x0 = self.origin_x + col * self.patch_size;
        let y0 = self.origin_y + row * self.patch_size;
        (x0, y0, x0 + self.patch_size, y0 + self.patch_size)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_rows).flat_map(move |r| (0..self.n_cols).map(move |c| (r, c)))
    }
}

/// One grid cell with its pixels and entropy statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub artwork_id: String,
    pub row: u32,
    pub col: u32,
    pub size: u32,
    /// Interleaved RGB, row-major.
    pub pixels: Vec<u8>,
    pub entropy: [f64; 3],
    pub mean_entropy: f64,
}

impl Patch {
    pub fn from_pixels(artwork_id: impl Into<String>, row: u32, col: u32, size: u32, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), (size * size * 3) as usize);
        let mut channels = [
            Vec::with_capacity(pixels.len() / 3),
            Vec::with_capacity(pixels.len() / 3),
            Vec::with_capacity(pixels.len() / 3),
        ];
        for px in pixels.chunks_exact(3) {
            for c in 0..3 {
                channels[c].push(px[c]);
            }
        }
        let entropy = [
            channel_entropy(&channels[0]),
            channel_entropy(&channels[1]),
            channel_entropy(&channels[2]),
        ];
        let mean_entropy = (entropy[0] + entropy[1] + entropy[2]) / 3.0;
        Self {
            artwork_id: artwork_id.into(),
            row,
            col,
            size,
            pixels,
            entropy,
            mean_entropy,
        }
    }

    pub fn record(&self) -> PatchRecord {
        PatchRecord {
            artwork_id: self.artwork_id.clone(),
            row: self.row,
            col: self.col,
            entropy_r: self.entropy[0],
            entropy_g: self.entropy[1],
            entropy_b: self.entropy[2],
            mean_entropy: self.mean_entropy,
        }
    }
}

impl EntropyStats for Patch {
    fn mean_entropy(&self) -> f64 {
        self.mean_entropy
    }
}

/// Cut every grid cell out of `image`, row-major.
pub fn extract_patches(image: &RgbImage, grid: &PatchGrid) -> Vec<Patch> {
    let p = grid.patch_size;
    assert!(
        grid.is_empty()
            || (grid.origin_x + grid.n_cols * p <= image.width()
                && grid.origin_y + grid.n_rows * p <= image.height()),
        "grid exceeds image bounds"
    );
    grid.cells()
        .map(|(r, c)| {
            let (x0, y0, _, _) = grid.rect(r, c);
            let mut pixels = Vec::with_capacity((p * p * 3) as usize);
            let stride = image.width() as usize * 3;
            let raw = image.as_raw();
            for y in y0..y0 + p {
                let start = y as usize * stride + x0 as usize * 3;
                pixels.extend_from_slice(&raw[start..start + p as usize * 3]);
            }
            Patch::from_pixels(grid.artwork_id.clone(), r, c, p, pixels)
        })
        .collect()
}
