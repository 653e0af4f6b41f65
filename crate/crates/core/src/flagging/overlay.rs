use std::path::Path;

use image::{Rgb, RgbImage};

use super::font;
use crate::error::{Error, Result};
use crate::patching::PatchGrid;

/// Outline thickness in pixels.
pub const OUTLINE: u32 = 3;
pub const LEGEND_LINE_HEIGHT: u32 = 12;
const LEGEND_PAD: u32 = 6;

/// One model family's flagged cells drawn in a single color.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayLayer {
    pub label: String,
    pub color: [u8; 3],
    pub cells: Vec<(u32, u32)>,
}

/// Fixed colors for the known families, then a fallback cycle.
pub fn family_color(family: &str, index: usize) -> [u8; 3] {
    const CYCLE: [[u8; 3]; 4] = [[60, 180, 75], [245, 130, 48], [145, 30, 180], [70, 240, 240]];
    match family {
        "kan" => [230, 25, 75],
        "patchnet" => [0, 130, 200],
        _ => CYCLE[index % CYCLE.len()],
    }
}

fn legend_height(layers: usize) -> u32 {
    2 * LEGEND_PAD + LEGEND_LINE_HEIGHT * layers.max(1) as u32
}

/// Copies `image` onto a canvas with a legend margin below it and outlines
/// every flagged cell. Layer `i` is inset by `3·i` pixels so coinciding
/// flags from several families stay visible.
pub fn render_overlay(image: &RgbImage, grid: &PatchGrid, layers: &[OverlayLayer], out: Option<&Path>) -> Result<RgbImage> {
    let (w, h) = image.dimensions();
    for layer in layers {
        for &(row, col) in &layer.cells {
            let inside_grid = row < grid.n_rows && col < grid.n_cols;
            let (_, _, x1, y1) = grid.rect(row, col);
            if !inside_grid || x1 > w || y1 > h {
                return Err(Error::OutOfBounds {
                    row: row as usize,
                    col: col as usize,
                    width: w,
                    height: h,
                });
            }
        }
    }
    let mut canvas = RgbImage::from_pixel(w, h + legend_height(layers.len()), Rgb([255, 255, 255]));
    image::imageops::replace(&mut canvas, image, 0, 0);

    for (i, layer) in layers.iter().enumerate() {
        let inset = OUTLINE * i as u32;
        let color = Rgb(layer.color);
        for &(row, col) in &layer.cells {
            let (x0, y0, x1, y1) = grid.rect(row, col);
            let (x0, y0) = (x0 + inset, y0 + inset);
            let (x1, y1) = (x1.saturating_sub(inset), y1.saturating_sub(inset));
            if x1 <= x0 || y1 <= y0 {
                continue;
            }
            for y in y0..y1 {
                for x in x0..x1 {
                    let edge = x < x0 + OUTLINE || x + OUTLINE >= x1 || y < y0 + OUTLINE || y + OUTLINE >= y1;
                    if edge {
                        canvas.put_pixel(x, y, color);
                    }
                }
            }
        }
    }

    let black = Rgb([0, 0, 0]);
    let mut put = |x: u32, y: u32, c: Rgb<u8>| {
        if x < canvas.width() && y < canvas.height() {
            canvas.put_pixel(x, y, c);
        }
    };
    if layers.is_empty() {
        font::for_each_pixel("no disputed patches", |dx, dy| put(LEGEND_PAD + dx, h + LEGEND_PAD + dy, black));
    }
    for (i, layer) in layers.iter().enumerate() {
        let top = h + LEGEND_PAD + LEGEND_LINE_HEIGHT * i as u32;
        for dy in 0..font::GLYPH_HEIGHT {
            for dx in 0..font::GLYPH_HEIGHT {
                put(LEGEND_PAD + dx, top + dy, Rgb(layer.color));
            }
        }
        let text = format!("{} disputed patches: {}", layer.label, layer.cells.len());
        font::for_each_pixel(&text, |dx, dy| put(LEGEND_PAD + 12 + dx, top + dy, black));
    }

    if let Some(path) = out {
        canvas.save(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    Ok(canvas)
}
