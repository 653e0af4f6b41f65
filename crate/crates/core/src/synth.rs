//! Synthetic painting corpus with class-separable textures.
//!
//! Class `c` paints tilted stripes in its own hue at its own period, plus
//! uniform noise. Some images get a flat rectangle with faint noise so the
//! entropy filter has low-information patches to remove.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;

use crate::corpus::{write_manifest_csv, ArtworkRecord, ClassList, CorpusManifest};
use crate::error::{Error, Result};
use crate::patching::PatchGrid;
use crate::tensorkit::seeded_rng;

pub const MIN_WIDTH: u32 = 768;
pub const MAX_WIDTH: u32 = 1000;
pub const MIN_HEIGHT: u32 = 512;
pub const MAX_HEIGHT: u32 = 700;
const FLAT_CELL: u32 = 256;

/// Class names: `artist_00 … artist_{n-2}` then `forger`.
pub fn class_names(n_classes: usize) -> Vec<String> {
    (0..n_classes)
        .map(|c| if c + 1 == n_classes { "forger".to_string() } else { format!("artist_{c:02}") })
        .collect()
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    match i as i64 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Renders one painting of class `class` out of `n_classes`.
pub fn render(class: usize, n_classes: usize, width: u32, height: u32, seed: u64, stream: u64) -> RgbImage {
    let mut rng = seeded_rng(seed, stream);
    let hue = class as f64 / n_classes as f64;
    let light = hsv(hue, 0.55, 0.95);
    let dark = hsv((hue + 0.04) % 1.0, 0.9, 0.45);
    let period = 18.0 + 6.0 * class as f64;
    let angle = (class as f64 * 37.0).to_radians();
    let (ca, sa) = (angle.cos(), angle.sin());
    let noise = 18.0 + (class % 4) as f64 * 6.0;
    let phase = rng.random_range(0.0..period);

    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let u = x as f64 * ca + y as f64 * sa + phase;
        let t = 0.5 + 0.5 * (u / period * std::f64::consts::TAU).sin();
        Rgb(std::array::from_fn(|c| {
            let base = 255.0 * (dark[c] + t * (light[c] - dark[c]));
            let v = base + rng.random_range(-noise..=noise);
            v.round().clamp(0.0, 255.0) as u8
        }))
    });

    // Near-flat block over one 256-pixel grid cell in roughly a third of the
    // paintings; noise amplitude 0..=2 keeps its entropy under ~2.4 bits.
    if rng.random_bool(0.35) {
        let grid = PatchGrid::plan("", width, height, FLAT_CELL);
        let row = rng.random_range(0..grid.n_rows);
        let col = rng.random_range(0..grid.n_cols);
        let (x0, y0, x1, y1) = grid.rect(row, col);
        let pad = rng.random_range(0..=12);
        let (x0, y0) = (x0.saturating_sub(pad), y0.saturating_sub(pad));
        let (x1, y1) = ((x1 + pad).min(width), (y1 + pad).min(height));
        let amp: i32 = rng.random_range(0..=2);
        let fill = [light[0] * 200.0, light[1] * 200.0, light[2] * 200.0];
        for y in y0..y1 {
            for x in x0..x1 {
                let px = std::array::from_fn(|c| {
                    let d = if amp == 0 { 0 } else { rng.random_range(-amp..=amp) };
                    (fill[c] as i32 + d).clamp(0, 255) as u8
                });
                img.put_pixel(x, y, Rgb(px));
            }
        }
    }
    img
}

/// Writes `n_classes · per_class` PNGs under `out_dir/images`, plus
/// `manifest.csv` (paths relative to `out_dir`) and its class sidecar.
pub fn synth_corpus(out_dir: &Path, n_classes: usize, per_class: usize, seed: u64) -> Result<CorpusManifest> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument("synthetic corpus needs at least 2 classes".into()));
    }
    if per_class < 3 {
        return Err(Error::InvalidArgument("per_class must be at least 3".into()));
    }
    let images = out_dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let names = class_names(n_classes);
    let mut dims = seeded_rng(seed, 0);
    let mut records = Vec::with_capacity(n_classes * per_class);
    for (c, name) in names.iter().enumerate() {
        for i in 0..per_class {
            let width = dims.random_range(MIN_WIDTH..=MAX_WIDTH);
            let height = dims.random_range(MIN_HEIGHT..=MAX_HEIGHT);
            let id = format!("{name}_{i:03}");
            let rel = PathBuf::from("images").join(format!("{id}.png"));
            let img = render(c, n_classes, width, height, seed, 1 + (c * per_class + i) as u64);
            let path = out_dir.join(&rel);
            img.save(&path).map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
            records.push(ArtworkRecord {
                id,
                artist: name.clone(),
                path: rel,
                width,
                height,
            });
        }
    }
    let classes = ClassList::new(names.clone(), names[n_classes - 1].clone())?;
    let manifest = CorpusManifest::new(records, classes)?;
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest_csv(&manifest, &manifest_path)?;
    manifest.classes.save(&ClassList::sidecar_path(&manifest_path))?;
    Ok(manifest)
}
