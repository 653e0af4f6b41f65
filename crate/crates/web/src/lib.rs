//! Browser demo: patch-entropy heatmap, Gaussian pre-blur and B-spline basis
//! curves, computed by the same code the pipeline uses.
//!
//! The `*_impl` functions are plain Rust so they can be tested natively; the
//! exported wrappers only translate errors into JS exceptions.

use image::{Rgb, RgbImage};
use patchflag::kan::{bspline_basis, SplineGrid};
use patchflag::patching::{extract_patches, gaussian_blur, FloatImage, PatchGrid};
use wasm_bindgen::prelude::*;

/// Mean channel entropy of every full patch of an image.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    n_rows: u32,
    n_cols: u32,
    origin_x: u32,
    origin_y: u32,
    patch_size: u32,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl EntropyMap {
    #[wasm_bindgen(getter)]
    pub fn n_rows(&self) -> u32 {
        self.n_rows
    }
    #[wasm_bindgen(getter)]
    pub fn n_cols(&self) -> u32 {
        self.n_cols
    }
    #[wasm_bindgen(getter)]
    pub fn origin_x(&self) -> u32 {
        self.origin_x
    }
    #[wasm_bindgen(getter)]
    pub fn origin_y(&self) -> u32 {
        self.origin_y
    }
    #[wasm_bindgen(getter)]
    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }
    /// Row-major mean entropies in bits, `n_rows × n_cols`.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
    /// Cells whose mean entropy exceeds `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v > threshold).count()
    }
}

fn rgba_to_rgb(rgba: &[u8], width: u32, height: u32) -> Result<RgbImage, String> {
    let expected = width as usize * height as usize * 4;
    if rgba.len() != expected {
        return Err(format!("expected {expected} RGBA bytes for {width}x{height}, got {}", rgba.len()));
    }
    Ok(RgbImage::from_fn(width, height, |x, y| {
        let i = (y as usize * width as usize + x as usize) * 4;
        Rgb([rgba[i], rgba[i + 1], rgba[i + 2]])
    }))
}

pub fn entropy_map_impl(rgba: &[u8], width: u32, height: u32, patch_size: u32) -> Result<EntropyMap, String> {
    if patch_size == 0 {
        return Err("patch size must be positive".into());
    }
    let img = rgba_to_rgb(rgba, width, height)?;
    let grid = PatchGrid::plan("upload", width, height, patch_size);
    let values = extract_patches(&img, &grid).iter().map(|p| p.mean_entropy).collect();
    Ok(EntropyMap {
        n_rows: grid.n_rows,
        n_cols: grid.n_cols,
        origin_x: grid.origin_x,
        origin_y: grid.origin_y,
        patch_size,
        values,
    })
}

pub fn blur_rgba_impl(rgba: &[u8], width: u32, height: u32, sigma: f64) -> Result<Vec<u8>, String> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(format!("sigma must be ≥ 0, got {sigma}"));
    }
    let img = rgba_to_rgb(rgba, width, height)?;
    let blurred = gaussian_blur(&FloatImage::from_rgb(&img), sigma);
    let mut out = Vec::with_capacity(rgba.len());
    for (px, a) in blurred.data.chunks_exact(3).zip(rgba.chunks_exact(4).map(|p| p[3])) {
        out.extend(px.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
        out.push(a);
    }
    Ok(out)
}

/// Basis values sampled on `samples` evenly spaced points of [-1, 1],
/// laid out `samples × n_basis`.
pub fn bspline_curves_impl(grid_size: usize, order: usize, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err("need at least 2 samples".into());
    }
    let grid = SplineGrid::new(grid_size, order, -1.0, 1.0).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(samples * grid.n_basis());
    for i in 0..samples {
        let x = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
        out.extend(bspline_basis(x, &grid));
    }
    Ok(out)
}

/// Mean entropy per patch of an RGBA canvas buffer.
#[wasm_bindgen]
pub fn entropy_map(rgba: &[u8], width: u32, height: u32, patch_size: u32) -> Result<EntropyMap, JsError> {
    entropy_map_impl(rgba, width, height, patch_size).map_err(|e| JsError::new(&e))
}

/// Gaussian blur of an RGBA canvas buffer; alpha passes through.
#[wasm_bindgen]
pub fn blur_rgba(rgba: &[u8], width: u32, height: u32, sigma: f64) -> Result<Vec<u8>, JsError> {
    blur_rgba_impl(rgba, width, height, sigma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bspline_curves(grid_size: usize, order: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    bspline_curves_impl(grid_size, order, samples).map_err(|e| JsError::new(&e))
}
