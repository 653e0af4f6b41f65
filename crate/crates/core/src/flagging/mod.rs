//! Forger-attribution evidence: top-k patch lists, painting flags,
//! misattribution counts, cross-model agreement and overlays.

mod font;
mod overlay;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patching::PatchGrid;

pub use overlay::{family_color, render_overlay, OverlayLayer, LEGEND_LINE_HEIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchPrediction {
    pub artwork_id: String,
    pub row: u32,
    pub col: u32,
    pub true_class: usize,
    pub argmax_class: usize,
    pub softmax: Vec<f64>,
    pub forger_score: f64,
}

impl PatchPrediction {
    pub fn new(artwork_id: impl Into<String>, row: u32, col: u32, true_class: usize, softmax: Vec<f64>, forger: usize) -> Self {
        let argmax_class = softmax
            .iter()
            .enumerate()
            .fold(0, |best, (i, &p)| if p > softmax[best] { i } else { best });
        let forger_score = softmax[forger];
        Self {
            artwork_id: artwork_id.into(),
            row,
            col,
            true_class,
            argmax_class,
            softmax,
            forger_score,
        }
    }

    fn key(&self) -> (&str, u32, u32) {
        (&self.artwork_id, self.row, self.col)
    }
}

/// Score descending, then `(artwork_id, row, col)` ascending.
pub fn rank_order(a: &PatchPrediction, b: &PatchPrediction) -> Ordering {
    b.forger_score.total_cmp(&a.forger_score).then_with(|| a.key().cmp(&b.key()))
}

/// Heap entry whose maximum is the lowest-ranked kept prediction.
struct Ranked<'a>(&'a PatchPrediction);

impl PartialEq for Ranked<'_> {
    fn eq(&self, other: &Self) -> bool {
        rank_order(self.0, other.0) == Ordering::Equal
    }
}
impl Eq for Ranked<'_> {}
impl PartialOrd for Ranked<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(self.0, other.0)
    }
}

/// The `k` highest forger scores, ties broken by `(artwork_id, row, col)`.
pub fn top_k_forger(predictions: &[PatchPrediction], k: usize) -> Result<Vec<PatchPrediction>> {
    if predictions.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for p in predictions {
        if heap.len() < k {
            heap.push(Ranked(p));
        } else if let Some(worst) = heap.peek() {
            if rank_order(p, worst.0) == Ordering::Less {
                heap.pop();
                heap.push(Ranked(p));
            }
        }
    }
    Ok(heap.into_sorted_vec().into_iter().map(|r| r.0.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedPainting {
    pub artwork_id: String,
    pub count: usize,
}

/// Per-painting counts within a top-k list.
pub fn count_per_painting(top_k: &[PatchPrediction]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for p in top_k {
        *counts.entry(p.artwork_id.clone()).or_insert(0) += 1;
    }
    counts
}

/// Paintings with at least `min_patches` entries in `top_k`, by count
/// descending then id.
pub fn flag_paintings(top_k: &[PatchPrediction], min_patches: usize) -> Result<Vec<FlaggedPainting>> {
    if min_patches == 0 {
        return Err(Error::InvalidArgument("min_patches must be at least 1".into()));
    }
    let mut flagged: Vec<FlaggedPainting> = count_per_painting(top_k)
        .into_iter()
        .filter(|&(_, c)| c >= min_patches)
        .map(|(artwork_id, count)| FlaggedPainting { artwork_id, count })
        .collect();
    flagged.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.artwork_id.cmp(&b.artwork_id)));
    Ok(flagged)
}

/// `(patches, paintings)` predicted as the forger while labeled otherwise.
pub fn count_misattributed(predictions: &[PatchPrediction], forger: usize) -> (usize, usize) {
    let mut paintings = BTreeSet::new();
    let mut patches = 0;
    for p in predictions {
        if p.argmax_class == forger && p.true_class != forger {
            patches += 1;
            paintings.insert(p.artwork_id.as_str());
        }
    }
    (patches, paintings.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagReport {
    pub split_id: usize,
    pub model_id: String,
    pub k: usize,
    pub min_patches: usize,
    pub top_k: Vec<PatchPrediction>,
    pub counts: BTreeMap<String, usize>,
    pub flagged: Vec<FlaggedPainting>,
    pub misattributed_patches: usize,
    pub misattributed_paintings: usize,
    /// Paintings that had at least one evaluated patch.
    pub evaluated: Vec<String>,
}

impl FlagReport {
    /// Builds a report from one split's test predictions. Patches of
    /// paintings labeled as the forger are excluded from the top-k list.
    pub fn build(
        split_id: usize,
        model_id: impl Into<String>,
        predictions: &[PatchPrediction],
        forger: usize,
        k: usize,
        min_patches: usize,
    ) -> Result<Self> {
        let candidates: Vec<PatchPrediction> = predictions.iter().filter(|p| p.true_class != forger).cloned().collect();
        let top_k = top_k_forger(&candidates, k)?;
        let flagged = flag_paintings(&top_k, min_patches)?;
        let (mp, mq) = count_misattributed(predictions, forger);
        let evaluated: BTreeSet<&str> = predictions.iter().map(|p| p.artwork_id.as_str()).collect();
        Ok(Self {
            split_id,
            model_id: model_id.into(),
            k,
            min_patches,
            counts: count_per_painting(&top_k),
            top_k,
            flagged,
            misattributed_patches: mp,
            misattributed_paintings: mq,
            evaluated: evaluated.into_iter().map(String::from).collect(),
        })
    }

    pub fn family(&self) -> &str {
        model_family(&self.model_id)
    }
}

/// `patchnet-S0` → `patchnet`.
pub fn model_family(model_id: &str) -> &str {
    model_id.split('-').next().unwrap_or(model_id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Painting → `(model_id, split_id)` pairs that flagged it.
    pub flagged_by: BTreeMap<String, Vec<(String, usize)>>,
    /// Paintings flagged by at least two model families.
    pub agreed: Vec<String>,
}

pub fn model_agreement(reports: &[FlagReport]) -> Result<Agreement> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("model agreement needs at least 2 reports".into()));
    }
    let mut flagged_by: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    for r in reports {
        for f in &r.flagged {
            flagged_by
                .entry(f.artwork_id.clone())
                .or_default()
                .push((r.model_id.clone(), r.split_id));
        }
    }
    for v in flagged_by.values_mut() {
        v.sort();
        v.dedup();
    }
    let agreed = flagged_by
        .iter()
        .filter(|(_, by)| by.iter().map(|(m, _)| model_family(m)).collect::<BTreeSet<_>>().len() >= 2)
        .map(|(id, _)| id.clone())
        .collect();
    Ok(Agreement { flagged_by, agreed })
}

type Rect = (f64, f64, f64, f64);

fn area((x0, y0, x1, y1): Rect) -> f64 {
    (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
}

fn intersect(a: Rect, b: Rect) -> f64 {
    area((a.0.max(b.0), a.1.max(b.1), a.2.min(b.2), a.3.min(b.3)))
}

/// Flagged cells of one grid as pixel rectangles divided by `scale`.
fn cell_rects(grid: &PatchGrid, cells: &[(u32, u32)], scale: f64) -> Result<Vec<Rect>> {
    let unique: BTreeSet<(u32, u32)> = cells.iter().copied().collect();
    unique
        .into_iter()
        .map(|(r, c)| {
            if r >= grid.n_rows || c >= grid.n_cols {
                return Err(Error::InvalidArgument(format!(
                    "cell ({r}, {c}) outside the {}x{} grid of {}",
                    grid.n_rows, grid.n_cols, grid.artwork_id
                )));
            }
            let (x0, y0, x1, y1) = grid.rect(r, c);
            Ok((x0 as f64 / scale, y0 as f64 / scale, x1 as f64 / scale, y1 as f64 / scale))
        })
        .collect()
}

/// Intersection-over-union of the flagged regions of two renderings of one
/// painting, with grid B at `scale` times the resolution of grid A. Returns 0
/// when neither region is non-empty.
pub fn cross_resolution_compare(
    grid_a: &PatchGrid,
    flags_a: &[(u32, u32)],
    grid_b: &PatchGrid,
    flags_b: &[(u32, u32)],
    scale: f64,
) -> Result<f64> {
    if grid_a.artwork_id != grid_b.artwork_id {
        return Err(Error::MismatchedArtwork(grid_a.artwork_id.clone(), grid_b.artwork_id.clone()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    // Cells of one grid never overlap, so unions are plain sums.
    let a = cell_rects(grid_a, flags_a, 1.0)?;
    let b = cell_rects(grid_b, flags_b, scale)?;
    let area_a: f64 = a.iter().map(|&r| area(r)).sum();
    let area_b: f64 = b.iter().map(|&r| area(r)).sum();
    let inter: f64 = a.iter().flat_map(|&ra| b.iter().map(move |&rb| intersect(ra, rb))).sum();
    let union = area_a + area_b - inter;
    Ok(if union > 0.0 { (inter / union).clamp(0.0, 1.0) } else { 0.0 })
}

pub fn predictions_header(n_classes: usize) -> String {
    let mut h = String::from("artwork_id,row,col,true_class,argmax_class");
    for i in 0..n_classes {
        h.push_str(&format!(",p_{i}"));
    }
    h
}

pub fn write_predictions(predictions: &[PatchPrediction], n_classes: usize, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let header = predictions_header(n_classes);
    w.write_record(header.split(','))
        .map_err(|e| Error::malformed(path, e))?;
    for p in predictions {
        let mut rec = vec![
            p.artwork_id.clone(),
            p.row.to_string(),
            p.col.to_string(),
            p.true_class.to_string(),
            p.argmax_class.to_string(),
        ];
        rec.extend(p.softmax.iter().map(|v| format!("{v:.9}")));
        w.write_record(&rec).map_err(|e| Error::malformed(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path, forger: usize) -> Result<Vec<PatchPrediction>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::malformed(path, e))?;
        if rec.len() < 7 {
            return Err(Error::malformed(path, "too few columns"));
        }
        let num = |i: usize| -> Result<u64> { rec[i].parse().map_err(|e| Error::malformed(path, e)) };
        let softmax: Vec<f64> = (5..rec.len())
            .map(|i| rec[i].parse::<f64>().map_err(|e| Error::malformed(path, e)))
            .collect::<Result<_>>()?;
        if forger >= softmax.len() {
            return Err(Error::malformed(path, "forger class beyond probability columns"));
        }
        let mut p = PatchPrediction::new(&rec[0], num(1)? as u32, num(2)? as u32, num(3)? as usize, softmax, forger);
        p.argmax_class = num(4)? as usize;
        out.push(p);
    }
    Ok(out)
}

/// Writes JSON followed by a newline.
pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::malformed(path, e))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::malformed(path, e))
}

impl FlagReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}
