//! Config-driven stages that read and write run artifacts under one output
//! directory:
//!
//! ```text
//! corpus/    manifest.csv, manifest.classes.json, summary.json
//! splits/    split_NN.json
//! patches/   inventory.csv, tensors_sNN.f32 (+ .json)
//! checkpoints/ {model}_splitNN.ckpt
//! reports/   train_*, eval_*, predictions_*.csv, flags_*.json, suite_*.json
//! overlays/  {artwork}.png
//! summary.json, suite_summary.csv
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cnn::PatchNetSize;
use crate::corpus::{
    filter_min_width, generate_split_suite, ingest_manifest, write_manifest_csv, ClassList, CorpusManifest, SplitFractions,
    SplitPlan, Subset,
};
use crate::error::{Error, Result};
use crate::flagging::{
    family_color, model_agreement, model_family, read_predictions, render_overlay, write_predictions, Agreement, FlagReport,
    OverlayLayer,
};
use crate::model::{AnyModel, ModelSpec};
use crate::patching::{
    extract_patches, gaussian_blur, hwc_to_chw, patch_to_tensor, read_inventory, write_inventory, FloatImage, PatchGrid,
    PatchRecord, TensorCache, TensorLayout, ValueRange,
};
use crate::tensorkit::{Checkpoint, OptimizerConfig};
use crate::trainer::{evaluate, threshold_sweep, train, PatchSet, Sample, SuiteTable, ThresholdRow, TrainConfig, TrainReport};
use crate::CODE_VERSION;

/// Threshold written as a number or the string `"none"`.
mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(t) => s.serialize_f64(*t),
            None => s.serialize_str("none"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(Some(t)),
            Raw::Text(t) if t == "none" => Ok(None),
            Raw::Text(t) => t.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

/// Trainer settings a run config may override per model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerOverrides {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub patience: usize,
    pub class_weights: bool,
}

impl TrainerOverrides {
    fn from_train(t: TrainConfig) -> Self {
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            optimizer: t.optimizer,
            patience: t.patience,
            class_weights: t.class_weights,
        }
    }

    pub fn kan() -> Self {
        Self::from_train(TrainConfig::for_kan())
    }

    pub fn cnn() -> Self {
        Self::from_train(TrainConfig::for_cnn())
    }
}

impl Default for TrainerOverrides {
    fn default() -> Self {
        Self::cnn()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub patch_size: u32,
    pub min_width: u32,
    #[serde(with = "threshold_serde")]
    pub entropy_threshold: Option<f64>,
    /// Gaussian blur σ in pixels; 0 disables blurring.
    pub blur_sigma: f64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub n_splits: usize,
    pub models: Vec<ModelSpec>,
    pub kan: TrainerOverrides,
    pub cnn: TrainerOverrides,
    pub k: usize,
    pub min_patches: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("synthetic/manifest.csv"),
            output_dir: PathBuf::from("run"),
            patch_size: 256,
            min_width: 768,
            entropy_threshold: Some(2.5),
            blur_sigma: 1.0,
            test_frac: 0.10,
            val_frac: 0.20,
            n_splits: 10,
            models: vec![ModelSpec::kan(vec![120, 84, 12]), ModelSpec::patchnet(PatchNetSize::S0)],
            kan: TrainerOverrides::kan(),
            cnn: TrainerOverrides::cnn(),
            k: 20,
            min_patches: 2,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::malformed(path, e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn fractions(&self) -> SplitFractions {
        SplitFractions {
            test_frac: self.test_frac,
            val_frac_of_rest: self.val_frac,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.patch_size == 0 || self.min_width == 0 {
            return bad("patch_size and min_width must be positive".into());
        }
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return bad(format!("blur_sigma must be ≥ 0, got {}", self.blur_sigma));
        }
        if self.k == 0 || self.min_patches == 0 {
            return bad("k and min_patches must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        for m in &self.models {
            if !(self.patch_size as usize).is_multiple_of(m.input_side()) {
                return bad(format!(
                    "{} input side {} does not divide patch size {}",
                    m.id(),
                    m.input_side(),
                    self.patch_size
                ));
            }
        }
        let ids: BTreeSet<String> = self.models.iter().map(ModelSpec::id).collect();
        if ids.len() != self.models.len() {
            return bad("model ids must be distinct".into());
        }
        for m in &self.models {
            self.train_config(m).validate()?;
        }
        Ok(())
    }

    /// Resolved trainer settings for one model.
    pub fn train_config(&self, spec: &ModelSpec) -> TrainConfig {
        let o = match spec {
            ModelSpec::Kan { .. } => &self.kan,
            ModelSpec::Patchnet { .. } => &self.cnn,
        };
        TrainConfig {
            epochs: o.epochs,
            batch_size: o.batch_size,
            optimizer: o.optimizer,
            patience: o.patience,
            seed: self.seed,
            shuffle_seed: self.seed.wrapping_add(0x9E37_79B9),
            entropy_threshold: self.entropy_threshold,
            blur_sigma: (self.blur_sigma > 0.0).then_some(self.blur_sigma),
            class_weights: o.class_weights,
        }
    }

    pub fn model(&self, id: &str) -> Result<&ModelSpec> {
        self.models
            .iter()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::InvalidArgument(format!("model \"{id}\" is not configured")))
    }

    pub fn layout(&self) -> Layout {
        Layout {
            root: self.output_dir.clone(),
        }
    }
}

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn corpus_dir(&self) -> PathBuf {
        self.root.join("corpus")
    }
    pub fn manifest(&self) -> PathBuf {
        self.corpus_dir().join("manifest.csv")
    }
    pub fn split(&self, i: usize) -> PathBuf {
        self.root.join("splits").join(format!("split_{i:02}.json"))
    }
    pub fn inventory(&self) -> PathBuf {
        self.root.join("patches").join("inventory.csv")
    }
    pub fn tensors(&self, side: usize) -> PathBuf {
        self.root.join("patches").join(format!("tensors_s{side}.f32"))
    }
    pub fn checkpoint(&self, model: &str, split: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("{model}_split{split:02}.ckpt"))
    }
    fn report(&self, kind: &str, model: &str, split: usize, ext: &str) -> PathBuf {
        self.root.join("reports").join(format!("{kind}_{model}_split{split:02}.{ext}"))
    }
    pub fn train_report(&self, model: &str, split: usize) -> PathBuf {
        self.report("train", model, split, "json")
    }
    pub fn eval_report(&self, model: &str, split: usize) -> PathBuf {
        self.report("eval", model, split, "json")
    }
    pub fn predictions(&self, model: &str, split: usize) -> PathBuf {
        self.report("predictions", model, split, "csv")
    }
    pub fn flags(&self, model: &str, split: usize) -> PathBuf {
        self.report("flags", model, split, "json")
    }
    pub fn suite_table(&self, model: &str) -> PathBuf {
        self.root.join("reports").join(format!("suite_{model}.json"))
    }
    pub fn entropy_sweep(&self) -> PathBuf {
        self.root.join("reports").join("entropy_sweep.csv")
    }
    pub fn overlay(&self, artwork: &str) -> PathBuf {
        self.root.join("overlays").join(format!("{artwork}.png"))
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.json")
    }
    pub fn suite_summary(&self) -> PathBuf {
        self.root.join("suite_summary.csv")
    }
}

/// JSON artifact body wrapped with the resolved config and code version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub code_version: String,
    pub config: RunConfig,
    pub body: T,
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_envelope<T: Serialize>(cfg: &RunConfig, body: &T, path: &Path) -> Result<()> {
    let env = Envelope {
        code_version: CODE_VERSION.to_string(),
        config: cfg.clone(),
        body,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Error::malformed(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_envelope<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T> {
    require(path, stage)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let env: Envelope<T> = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))?;
    Ok(env.body)
}

fn require(path: &Path, stage: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub artworks: usize,
    pub dropped_below_min_width: usize,
    pub per_artist: Vec<(String, usize)>,
}

/// Validates the input manifest, resolves image paths against its directory,
/// applies the width filter and writes the canonical manifest.
pub fn ingest(cfg: &RunConfig) -> Result<CorpusManifest> {
    cfg.validate()?;
    let raw = ingest_manifest(&cfg.manifest, None)?;
    let base = cfg.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut resolved = raw.clone();
    for a in &mut resolved.artworks {
        if a.path.is_relative() {
            a.path = base.join(&a.path);
        }
    }
    let kept = filter_min_width(&resolved, cfg.min_width)?;
    let layout = cfg.layout();
    let path = layout.manifest();
    ensure_parent(&path)?;
    write_manifest_csv(&kept, &path)?;
    kept.classes.save(&ClassList::sidecar_path(&path))?;
    let summary = CorpusSummary {
        artworks: kept.artworks.len(),
        dropped_below_min_width: raw.artworks.len() - kept.artworks.len(),
        per_artist: kept.per_artist_counts(),
    };
    write_envelope(cfg, &summary, &layout.corpus_dir().join("summary.json"))?;
    Ok(kept)
}

pub fn load_corpus(cfg: &RunConfig) -> Result<CorpusManifest> {
    let path = cfg.layout().manifest();
    require(&path, "ingest")?;
    ingest_manifest(&path, None)
}

pub fn split(cfg: &RunConfig) -> Result<Vec<SplitPlan>> {
    cfg.validate()?;
    let manifest = load_corpus(cfg)?;
    let plans = generate_split_suite(&manifest, cfg.n_splits, cfg.fractions(), cfg.seed)?;
    let layout = cfg.layout();
    for (i, p) in plans.iter().enumerate() {
        let path = layout.split(i);
        ensure_parent(&path)?;
        p.save(&path)?;
    }
    Ok(plans)
}

pub fn load_splits(cfg: &RunConfig) -> Result<Vec<SplitPlan>> {
    let layout = cfg.layout();
    (0..cfg.n_splits)
        .map(|i| {
            let path = layout.split(i);
            require(&path, "split")?;
            SplitPlan::load(&path)
        })
        .collect()
}

fn tensor_sides(cfg: &RunConfig) -> Vec<usize> {
    let sides: BTreeSet<usize> = cfg.models.iter().map(ModelSpec::input_side).collect();
    sides.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSummary {
    pub patches: usize,
    pub above_threshold: usize,
    pub tensor_sides: Vec<usize>,
}

/// Cuts every painting into its patch grid, records entropies of the raw
/// pixels and caches block-averaged tensors of the blurred image.
pub fn patch(cfg: &RunConfig) -> Result<PatchSummary> {
    cfg.validate()?;
    let manifest = load_corpus(cfg)?;
    let layout = cfg.layout();
    let sides = tensor_sides(cfg);
    let mut caches: Vec<TensorCache> = sides.iter().map(|&s| TensorCache::new(s, ValueRange::Symmetric)).collect();
    let mut records = Vec::new();
    let size = cfg.patch_size as usize;
    for art in &manifest.artworks {
        let img = image::open(&art.path)
            .map_err(|e| Error::Image {
                path: art.path.clone(),
                message: e.to_string(),
            })?
            .to_rgb8();
        if img.dimensions() != (art.width, art.height) {
            return Err(Error::Image {
                path: art.path.clone(),
                message: format!(
                    "image is {}x{} but the manifest says {}x{}",
                    img.width(),
                    img.height(),
                    art.width,
                    art.height
                ),
            });
        }
        let grid = PatchGrid::plan(&art.id, art.width, art.height, cfg.patch_size);
        let patches = extract_patches(&img, &grid);
        let blurred = gaussian_blur(&FloatImage::from_rgb(&img), cfg.blur_sigma);
        for p in &patches {
            let (x0, y0, _, _) = grid.rect(p.row, p.col);
            let pixels = blurred.crop(x0 as usize, y0 as usize, size);
            for cache in &mut caches {
                let t = patch_to_tensor(&pixels, size, cache.header.side, ValueRange::Symmetric, TensorLayout::Flat)?;
                cache.push(t.data());
            }
            records.push(p.record());
        }
    }
    ensure_parent(&layout.inventory())?;
    write_inventory(&records, &layout.inventory())?;
    for cache in &caches {
        cache.save(&layout.tensors(cache.header.side))?;
    }
    let summary = PatchSummary {
        patches: records.len(),
        above_threshold: records
            .iter()
            .filter(|r| cfg.entropy_threshold.is_none_or(|t| r.mean_entropy > t))
            .count(),
        tensor_sides: sides,
    };
    write_envelope(cfg, &summary, &layout.root.join("patches").join("summary.json"))?;
    Ok(summary)
}

/// Samples for one model's input format.
pub fn load_patch_set(cfg: &RunConfig, spec: &ModelSpec) -> Result<PatchSet> {
    let manifest = load_corpus(cfg)?;
    let layout = cfg.layout();
    let inv_path = layout.inventory();
    require(&inv_path, "patch")?;
    let records: Vec<PatchRecord> = read_inventory(&inv_path)?;
    let side = spec.input_side();
    let t_path = layout.tensors(side);
    require(&t_path, "patch")?;
    let cache = TensorCache::load(&t_path)?;
    if cache.header.count != records.len() {
        return Err(Error::malformed(&t_path, "tensor count does not match the inventory"));
    }
    let mut samples = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        let art = manifest
            .get(&r.artwork_id)
            .ok_or_else(|| Error::malformed(&inv_path, format!("unknown artwork \"{}\"", r.artwork_id)))?;
        let hwc = cache.entry(i);
        let input = match spec.layout() {
            TensorLayout::Flat => hwc.to_vec(),
            TensorLayout::Chw => hwc_to_chw(hwc, side),
        };
        samples.push(Sample {
            label: manifest.label_of(art),
            artwork_id: r.artwork_id,
            row: r.row,
            col: r.col,
            mean_entropy: r.mean_entropy,
            input,
        });
    }
    Ok(PatchSet {
        class_names: manifest.classes.names().to_vec(),
        forger: manifest.classes.forger_index(),
        samples,
    })
}

fn checkpoint_meta(cfg: &RunConfig, train_cfg: &TrainConfig) -> serde_json::Value {
    serde_json::json!({
        "code_version": CODE_VERSION,
        "train": train_cfg,
        "config": cfg,
    })
}

/// Which models and splits a stage covers; `None` means all.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub model: Option<String>,
    pub split: Option<usize>,
}

impl Selection {
    fn models<'a>(&self, cfg: &'a RunConfig) -> Result<Vec<&'a ModelSpec>> {
        match &self.model {
            Some(id) => Ok(vec![cfg.model(id)?]),
            None => Ok(cfg.models.iter().collect()),
        }
    }

    fn splits(&self, cfg: &RunConfig) -> Result<Vec<usize>> {
        match self.split {
            Some(i) if i >= cfg.n_splits => Err(Error::InvalidArgument(format!(
                "split {i} out of range for {} splits",
                cfg.n_splits
            ))),
            Some(i) => Ok(vec![i]),
            None => Ok((0..cfg.n_splits).collect()),
        }
    }
}

pub fn train_stage(cfg: &RunConfig, sel: &Selection) -> Result<Vec<TrainReport>> {
    cfg.validate()?;
    let splits = load_splits(cfg)?;
    let layout = cfg.layout();
    let mut reports = Vec::new();
    for spec in sel.models(cfg)? {
        let patches = load_patch_set(cfg, spec)?;
        let base = cfg.train_config(spec);
        for i in sel.splits(cfg)? {
            let split = &splits[i];
            let tc = TrainConfig {
                seed: base.seed.wrapping_add(split.seed),
                shuffle_seed: base.shuffle_seed.wrapping_add(split.seed),
                ..base.clone()
            };
            let model = spec.build(patches.n_classes(), tc.seed)?;
            let (model, mut report) = train(model, split, &patches, &tc)?;
            report.model_id = spec.id();
            let ckpt = model.to_checkpoint(spec, tc.seed, report.best_epoch, checkpoint_meta(cfg, &tc));
            let path = layout.checkpoint(&spec.id(), i);
            ensure_parent(&path)?;
            ckpt.save(&path)?;
            write_envelope(cfg, &report, &layout.train_report(&spec.id(), i))?;
            reports.push(report);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub model_id: String,
    pub split: usize,
    pub test_patches: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
}

pub fn eval_stage(cfg: &RunConfig, sel: &Selection) -> Result<Vec<EvalSummary>> {
    cfg.validate()?;
    let splits = load_splits(cfg)?;
    let layout = cfg.layout();
    let mut out = Vec::new();
    for spec in sel.models(cfg)? {
        let patches = load_patch_set(cfg, spec)?;
        for i in sel.splits(cfg)? {
            let path = layout.checkpoint(&spec.id(), i);
            require(&path, "train")?;
            let (model, _) = AnyModel::from_checkpoint(&Checkpoint::load(&path)?)?;
            let test = patches.select(&splits[i], Subset::Test, cfg.entropy_threshold)?;
            let eval = evaluate(&model, &test, patches.forger)?;
            write_predictions(&eval.records, patches.n_classes(), &layout.predictions(&spec.id(), i))?;
            let summary = EvalSummary {
                model_id: spec.id(),
                split: i,
                test_patches: test.len(),
                loss: eval.loss,
                accuracy: eval.accuracy,
                per_class_accuracy: eval.per_class_accuracy,
                confusion: eval.confusion,
            };
            write_envelope(cfg, &summary, &layout.eval_report(&spec.id(), i))?;
            out.push(summary);
        }
    }
    Ok(out)
}

pub fn flag_stage(cfg: &RunConfig, sel: &Selection) -> Result<Vec<FlagReport>> {
    cfg.validate()?;
    let manifest = load_corpus(cfg)?;
    let forger = manifest.classes.forger_index();
    let layout = cfg.layout();
    let mut out = Vec::new();
    for spec in sel.models(cfg)? {
        for i in sel.splits(cfg)? {
            let path = layout.predictions(&spec.id(), i);
            require(&path, "eval")?;
            let preds = read_predictions(&path, forger)?;
            let report = FlagReport::build(i, spec.id(), &preds, forger, cfg.k, cfg.min_patches)?;
            write_envelope(cfg, &report, &layout.flags(&spec.id(), i))?;
            out.push(report);
        }
    }
    Ok(out)
}

pub fn load_flag_reports(cfg: &RunConfig) -> Result<Vec<FlagReport>> {
    let layout = cfg.layout();
    let mut out = Vec::new();
    for spec in &cfg.models {
        for i in 0..cfg.n_splits {
            out.push(read_envelope(&layout.flags(&spec.id(), i), "flag")?);
        }
    }
    Ok(out)
}

/// Draws every flagged painting's top-k patches, one color per model family.
pub fn overlay_stage(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let manifest = load_corpus(cfg)?;
    let reports = load_flag_reports(cfg)?;
    // painting → family → cells
    let mut cells: BTreeMap<String, BTreeMap<String, BTreeSet<(u32, u32)>>> = BTreeMap::new();
    for r in &reports {
        let flagged: BTreeSet<&str> = r.flagged.iter().map(|f| f.artwork_id.as_str()).collect();
        for p in r.top_k.iter().filter(|p| flagged.contains(p.artwork_id.as_str())) {
            cells
                .entry(p.artwork_id.clone())
                .or_default()
                .entry(r.family().to_string())
                .or_default()
                .insert((p.row, p.col));
        }
    }
    let layout = cfg.layout();
    let families: Vec<&str> = {
        let set: BTreeSet<&str> = cfg.models.iter().map(ModelSpec::family).collect();
        set.into_iter().collect()
    };
    let mut written = Vec::new();
    for (id, by_family) in &cells {
        let art = manifest
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("flag report names unknown artwork \"{id}\"")))?;
        let img = image::open(&art.path)
            .map_err(|e| Error::Image {
                path: art.path.clone(),
                message: e.to_string(),
            })?
            .to_rgb8();
        let grid = PatchGrid::plan(id, art.width, art.height, cfg.patch_size);
        let layers: Vec<OverlayLayer> = families
            .iter()
            .enumerate()
            .filter_map(|(fi, fam)| {
                by_family.get(*fam).map(|c| OverlayLayer {
                    label: fam.to_string(),
                    color: family_color(fam, fi),
                    cells: c.iter().copied().collect(),
                })
            })
            .collect();
        let path = layout.overlay(id);
        ensure_parent(&path)?;
        render_overlay(&img, &grid, &layers, Some(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisattributionRow {
    pub model_id: String,
    pub split: usize,
    pub patches: usize,
    pub paintings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingRow {
    pub painting: String,
    pub artist: String,
    /// Mean top-k count over patchnet reports that evaluated the painting.
    pub avg_topk_patches_cnn: Option<f64>,
    /// Mean top-k count over kan reports that evaluated the painting.
    pub topk_patches_kan: Option<f64>,
    pub flagged_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub accuracy: Vec<SuiteTable>,
    pub misattribution: Vec<MisattributionRow>,
    pub paintings: Vec<PaintingRow>,
    pub agreement: Option<Agreement>,
}

fn family_mean(reports: &[FlagReport], family: &str, painting: &str) -> Option<f64> {
    let counts: Vec<f64> = reports
        .iter()
        .filter(|r| model_family(&r.model_id) == family && r.evaluated.iter().any(|e| e == painting))
        .map(|r| r.counts.get(painting).copied().unwrap_or(0) as f64)
        .collect();
    (!counts.is_empty()).then(|| counts.iter().sum::<f64>() / counts.len() as f64)
}

/// Painting-level table over all reports.
pub fn painting_table(manifest: &CorpusManifest, reports: &[FlagReport]) -> Vec<PaintingRow> {
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for r in reports {
        ids.extend(r.counts.keys().map(String::as_str));
    }
    let mut rows: Vec<PaintingRow> = ids
        .into_iter()
        .map(|id| {
            let flagged_by = reports
                .iter()
                .filter(|r| r.flagged.iter().any(|f| f.artwork_id == id))
                .map(|r| format!("{}@split{:02}", r.model_id, r.split_id))
                .collect();
            PaintingRow {
                painting: id.to_string(),
                artist: manifest.get(id).map(|a| a.artist.clone()).unwrap_or_default(),
                avg_topk_patches_cnn: family_mean(reports, "patchnet", id),
                topk_patches_kan: family_mean(reports, "kan", id),
                flagged_by,
            }
        })
        .collect();
    let desc = |a: Option<f64>, b: Option<f64>| b.unwrap_or(-1.0).total_cmp(&a.unwrap_or(-1.0));
    rows.sort_by(|a, b| {
        desc(a.avg_topk_patches_cnn, b.avg_topk_patches_cnn)
            .then_with(|| desc(a.topk_patches_kan, b.topk_patches_kan))
            .then_with(|| a.painting.cmp(&b.painting))
    });
    rows
}

fn fmt_count(v: Option<f64>) -> String {
    v.map_or_else(|| "not evaluated".to_string(), |x| format!("{x:.2}"))
}

pub fn write_painting_csv(rows: &[PaintingRow], path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::malformed(path, e))?;
    let err = |e: csv::Error| Error::malformed(path, e);
    w.write_record(["painting", "artist", "avg_topk_patches_cnn", "topk_patches_kan", "flagged_by"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.painting.clone(),
            r.artist.clone(),
            fmt_count(r.avg_topk_patches_cnn),
            fmt_count(r.topk_patches_kan),
            r.flagged_by.join(";"),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn suite_table_from_reports(cfg: &RunConfig, spec: &ModelSpec) -> Result<SuiteTable> {
    let layout = cfg.layout();
    let rows = (0..cfg.n_splits)
        .map(|i| {
            let r: TrainReport = read_envelope(&layout.train_report(&spec.id(), i), "train")?;
            Ok(crate::trainer::SplitResult {
                split: i,
                train_patches: r.train_patches,
                val_patches: r.val_patches,
                min_val_loss: r.min_val_loss,
                val_accuracy: r.val_accuracy,
                best_epoch: r.best_epoch,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteTable::from_results(spec.id(), rows))
}

/// Merges per-split artifacts into `summary.json` and `suite_summary.csv`.
pub fn summarize(cfg: &RunConfig) -> Result<SuiteSummary> {
    let manifest = load_corpus(cfg)?;
    let layout = cfg.layout();
    let mut accuracy = Vec::new();
    for spec in &cfg.models {
        let table = suite_table_from_reports(cfg, spec)?;
        write_envelope(cfg, &table, &layout.suite_table(&spec.id()))?;
        accuracy.push(table);
    }
    let reports = load_flag_reports(cfg)?;
    let misattribution = reports
        .iter()
        .map(|r| MisattributionRow {
            model_id: r.model_id.clone(),
            split: r.split_id,
            patches: r.misattributed_patches,
            paintings: r.misattributed_paintings,
        })
        .collect();
    let paintings = painting_table(&manifest, &reports);
    write_painting_csv(&paintings, &layout.suite_summary())?;
    let agreement = if reports.len() >= 2 { Some(model_agreement(&reports)?) } else { None };
    let summary = SuiteSummary {
        accuracy,
        misattribution,
        paintings,
        agreement,
    };
    write_envelope(cfg, &summary, &layout.summary())?;
    Ok(summary)
}

/// Every stage in order, for all models and splits.
pub fn suite(cfg: &RunConfig) -> Result<SuiteSummary> {
    ingest(cfg)?;
    split(cfg)?;
    patch(cfg)?;
    let all = Selection::default();
    train_stage(cfg, &all)?;
    eval_stage(cfg, &all)?;
    flag_stage(cfg, &all)?;
    overlay_stage(cfg)?;
    summarize(cfg)
}

pub const SWEEP_HEADER: &str = "threshold,train_patches,val_patches,min_val_loss,avg_val_acc,std_val_acc";

/// Entropy-threshold comparison for one model over the stored splits.
pub fn entropy_sweep(cfg: &RunConfig, model: &str, thresholds: &[Option<f64>]) -> Result<Vec<ThresholdRow>> {
    cfg.validate()?;
    let spec = cfg.model(model)?;
    let splits = load_splits(cfg)?;
    let patches = load_patch_set(cfg, spec)?;
    let rows = threshold_sweep(spec, &splits, &patches, thresholds, &cfg.train_config(spec))?;
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6}\n",
            r.threshold.map_or("none".to_string(), |t| t.to_string()),
            r.train_patches,
            r.val_patches,
            r.min_val_loss,
            r.avg_val_accuracy,
            r.std_val_accuracy
        ));
    }
    write_text(&cfg.layout().entropy_sweep(), &text)?;
    Ok(rows)
}
