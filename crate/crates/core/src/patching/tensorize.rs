use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorkit::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueRange {
    /// `[0, 1]`
    Unit,
    /// `[-1, 1]`
    Symmetric,
}

impl ValueRange {
    #[inline]
    pub fn scale(self, intensity: f32) -> f32 {
        match self {
            ValueRange::Unit => intensity / 255.0,
            ValueRange::Symmetric => intensity / 127.5 - 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueRange::Unit => "unit",
            ValueRange::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorLayout {
    /// Flat `3·side²` vector in (row, col, channel) order.
    Flat,
    /// `(3, side, side)`.
    Chw,
}

/// Block-average a square HWC patch down to `side`×`side` and rescale.
///
/// `pixels` holds `size·size·3` intensities in `[0, 255]`.
pub fn patch_to_tensor(
    pixels: &[f32],
    size: usize,
    side: usize,
    range: ValueRange,
    layout: TensorLayout,
) -> Result<Tensor<f32>> {
    if side == 0 || !size.is_multiple_of(side) {
        return Err(Error::InvalidArgument(format!(
            "side {side} does not divide patch size {size}"
        )));
    }
    if pixels.len() != size * size * 3 {
        return Err(Error::Shape(format!(
            "expected {} pixel values, got {}",
            size * size * 3,
            pixels.len()
        )));
    }
    let block = size / side;
    let norm = 1.0 / (block * block) as f64;
    let mut flat = vec![0.0f32; side * side * 3];
    for r in 0..side {
        for c in 0..side {
            let mut acc = [0.0f64; 3];
            for y in r * block..(r + 1) * block {
                let row = &pixels[(y * size + c * block) * 3..(y * size + (c + 1) * block) * 3];
                for px in row.chunks_exact(3) {
                    acc[0] += px[0] as f64;
                    acc[1] += px[1] as f64;
                    acc[2] += px[2] as f64;
                }
            }
            for ch in 0..3 {
                flat[(r * side + c) * 3 + ch] = range.scale((acc[ch] * norm) as f32);
            }
        }
    }
    Ok(match layout {
        TensorLayout::Flat => Tensor::from_vec(vec![side * side * 3], flat),
        TensorLayout::Chw => Tensor::from_vec(vec![3, side, side], hwc_to_chw(&flat, side)),
    })
}

/// Reorder an interleaved `side`×`side`×3 buffer into channel planes.
pub fn hwc_to_chw(hwc: &[f32], side: usize) -> Vec<f32> {
    let plane = side * side;
    let mut out = vec![0.0; hwc.len()];
    for (i, px) in hwc.chunks_exact(3).enumerate() {
        for c in 0..3 {
            out[c * plane + i] = px[c];
        }
    }
    out
}
