//! Centered patch grids, per-channel entropy, Gaussian blur and
//! model-ready patch tensors.

mod blur;
mod entropy;
mod grid;
mod inventory;
mod tensorize;

pub use blur::{gaussian_blur, gaussian_kernel, reflect_index, FloatImage};
pub use entropy::{channel_entropy, filter_by_entropy, mean_entropy, EntropyStats};
pub use grid::{extract_patches, Patch, PatchGrid};
pub use inventory::{
    read_inventory, write_inventory, PatchRecord, TensorCache, TensorCacheHeader,
};
pub use tensorize::{hwc_to_chw, patch_to_tensor, TensorLayout, ValueRange};

/// Default patch edge in pixels.
pub const PATCH_SIZE: u32 = 256;
