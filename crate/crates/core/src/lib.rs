//! Patch-level forger attribution.
//!
//! The pipeline splits a painting corpus into stratified train/val/test
//! suites, cuts every painting into a centered grid of 256×256 patches,
//! drops low-entropy patches, trains Kolmogorov–Arnold and convolutional
//! classifiers per split, and aggregates the patches attributed to the
//! forger class into per-painting flag reports and overlay images.

pub mod cnn;
pub mod corpus;
pub mod error;
pub mod flagging;
pub mod kan;
pub mod model;
pub mod patching;
pub mod pipeline;
pub mod synth;
pub mod tensorkit;
pub mod trainer;

pub use error::{Error, ExitKind, Result};

/// Version string embedded in every run artifact.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
