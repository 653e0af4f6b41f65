//! Seeded mini-batch training with early stopping on validation loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cnn::PatchNetSize;
use crate::corpus::{SplitPlan, Subset};
use crate::error::{Error, Result};
use crate::flagging::PatchPrediction;
use crate::model::{AnyModel, Classifier, ModelSpec};
use crate::patching::EntropyStats;
use crate::tensorkit::{seeded_rng, softmax, Optimizer, OptimizerConfig, Tensor};

/// One model-ready patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub artwork_id: String,
    pub row: u32,
    pub col: u32,
    pub label: usize,
    pub mean_entropy: f64,
    pub input: Vec<f32>,
}

impl EntropyStats for Sample {
    fn mean_entropy(&self) -> f64 {
        self.mean_entropy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub class_names: Vec<String>,
    pub forger: usize,
    pub samples: Vec<Sample>,
}

impl PatchSet {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples of `subset` whose mean entropy exceeds `threshold`. Errors if a
    /// sample's painting is missing from the plan.
    pub fn select(&self, split: &SplitPlan, subset: Subset, threshold: Option<f64>) -> Result<Vec<&Sample>> {
        let mut out = Vec::new();
        for s in &self.samples {
            let assigned = split
                .subset_of(&s.artwork_id)
                .ok_or_else(|| Error::InvalidArgument(format!("artwork \"{}\" is not covered by split {}", s.artwork_id, split.seed)))?;
            if assigned == subset && threshold.is_none_or(|t| s.mean_entropy > t) {
                out.push(s);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub patience: usize,
    /// Parameter initialization seed.
    pub seed: u64,
    /// Mini-batch order seed, independent of `seed`.
    pub shuffle_seed: u64,
    /// Patches must exceed this mean entropy; `None` keeps all.
    pub entropy_threshold: Option<f64>,
    /// Gaussian blur applied to images before tensorizing; recorded here so
    /// checkpoints carry it.
    pub blur_sigma: Option<f64>,
    /// Inverse-frequency class weights in the loss.
    pub class_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_cnn()
    }
}

impl TrainConfig {
    pub fn for_kan() -> Self {
        Self {
            optimizer: OptimizerConfig::sgd(0.05),
            ..Self::for_cnn()
        }
    }

    pub fn for_cnn() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            optimizer: OptimizerConfig::adam(1e-3),
            patience: 10,
            seed: 0,
            shuffle_seed: 1,
            entropy_threshold: Some(2.5),
            blur_sigma: Some(1.0),
            class_weights: false,
        }
    }

    pub fn for_spec(spec: &ModelSpec) -> Self {
        match spec {
            ModelSpec::Kan { .. } => Self::for_kan(),
            ModelSpec::Patchnet { .. } => Self::for_cnn(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be at least 1".into()));
        }
        if self.patience > self.epochs {
            return Err(Error::InvalidArgument(format!(
                "patience {} exceeds epochs {}",
                self.patience, self.epochs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_id: String,
    pub train_patches: usize,
    pub val_patches: usize,
    pub epochs: Vec<EpochStats>,
    pub min_val_loss: f64,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub val_accuracy: f64,
    /// `None` for classes absent from the validation set.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]` on the validation set.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
    pub records: Vec<PatchPrediction>,
}

const EVAL_BATCH: usize = 64;

/// Loss, accuracy, confusion and per-patch softmax over `samples`.
pub fn evaluate<M: Classifier<f32>>(model: &M, samples: &[&Sample], forger: usize) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let nc = model.n_classes();
    let mut confusion = vec![vec![0usize; nc]; nc];
    let mut records = Vec::with_capacity(samples.len());
    let mut loss = 0.0f64;
    for chunk in samples.chunks(EVAL_BATCH) {
        let inputs: Vec<&[f32]> = chunk.iter().map(|s| s.input.as_slice()).collect();
        let (logits, _) = model.forward(&inputs)?;
        for (s, z) in chunk.iter().zip(logits.chunks_exact(nc)) {
            if s.label >= nc {
                return Err(Error::LabelOutOfRange { label: s.label, n_classes: nc });
            }
            let z64: Vec<f64> = z.iter().map(|&v| v as f64).collect();
            let p = softmax(&z64);
            let l = -p[s.label].max(f64::MIN_POSITIVE).ln();
            if !l.is_finite() || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite output on patch {}({}, {})",
                    s.artwork_id, s.row, s.col
                )));
            }
            loss += l;
            let rec = PatchPrediction::new(&s.artwork_id, s.row, s.col, s.label, p, forger);
            confusion[s.label][rec.argmax_class] += 1;
            records.push(rec);
        }
    }
    let correct: usize = (0..nc).map(|c| confusion[c][c]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[c] as f64 / n as f64)
        })
        .collect();
    Ok(Evaluation {
        loss: loss / samples.len() as f64,
        accuracy: correct as f64 / samples.len() as f64,
        per_class_accuracy,
        confusion,
        records,
    })
}

fn class_weights(train: &[&Sample], n_classes: usize, enabled: bool) -> Vec<f64> {
    if !enabled {
        return vec![1.0; n_classes];
    }
    let mut counts = vec![0usize; n_classes];
    for s in train {
        counts[s.label] += 1;
    }
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { train.len() as f64 / (n_classes * c) as f64 })
        .collect()
}

/// Trains on `train`, tracking `val`, and returns the parameters of the epoch
/// with the lowest validation loss.
pub fn fit<M: Classifier<f32>>(
    model: M,
    train: &[&Sample],
    val: &[&Sample],
    class_names: &[String],
    forger: usize,
    config: &TrainConfig,
) -> Result<(M, TrainReport)> {
    config.validate()?;
    let nc = model.n_classes();
    if nc != class_names.len() {
        return Err(Error::Shape(format!(
            "model has {nc} outputs but the corpus declares {} classes",
            class_names.len()
        )));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut present = vec![false; nc];
    for s in train {
        if s.label >= nc {
            return Err(Error::LabelOutOfRange { label: s.label, n_classes: nc });
        }
        present[s.label] = true;
    }
    if let Some(c) = present.iter().position(|p| !p) {
        return Err(Error::ClassAbsent(class_names[c].clone()));
    }
    let weights = class_weights(train, nc, config.class_weights);

    let mut model = model;
    let mut optimizer = Optimizer::new(config.optimizer);
    let mut rng = seeded_rng(config.shuffle_seed, 1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(M, f64, usize, Evaluation)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&[f32]> = idx.iter().map(|&i| train[i].input.as_slice()).collect();
            let (logits, cache) = model.forward(&inputs)?;
            let wsum: f64 = idx.iter().map(|&i| weights[train[i].label]).sum();
            let mut grad = vec![0.0f32; logits.len()];
            for (j, &i) in idx.iter().enumerate() {
                let label = train[i].label;
                let z: Vec<f64> = logits[j * nc..(j + 1) * nc].iter().map(|&v| v as f64).collect();
                let p = softmax(&z);
                let l = -p[label].max(f64::MIN_POSITIVE).ln();
                if !l.is_finite() || p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical(format!("non-finite loss at epoch {epoch}, batch {b}")));
                }
                loss_sum += l;
                let argmax = p.iter().enumerate().fold(0, |m, (c, &v)| if v > p[m] { c } else { m });
                correct += usize::from(argmax == label);
                let w = weights[label] / wsum;
                for c in 0..nc {
                    let onehot = if c == label { 1.0 } else { 0.0 };
                    grad[j * nc + c] = ((p[c] - onehot) * w) as f32;
                }
            }
            let grads = model.backward(&cache, &grad)?;
            if grads.iter().any(|g| !g.all_finite()) {
                return Err(Error::Numerical(format!("non-finite gradient at epoch {epoch}, batch {b}")));
            }
            optimizer.step(model.params_mut(), &grads)?;
        }
        let eval = evaluate(&model, val, forger)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_loss: eval.loss,
            val_accuracy: eval.accuracy,
        });
        if best.as_ref().is_none_or(|(_, l, _, _)| eval.loss < *l) {
            best = Some((model.clone(), eval.loss, epoch, eval));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= config.patience {
            break;
        }
    }
    let (best_model, min_val_loss, best_epoch, eval) = best.expect("at least one epoch ran");
    Ok((
        best_model,
        TrainReport {
            model_id: String::new(),
            train_patches: train.len(),
            val_patches: val.len(),
            epochs: history,
            min_val_loss,
            best_epoch,
            val_accuracy: eval.accuracy,
            per_class_accuracy: eval.per_class_accuracy,
            confusion: eval.confusion,
        },
    ))
}

/// Trains on the split's train patches, validating on its val patches, both
/// filtered by the configured entropy threshold.
pub fn train<M: Classifier<f32>>(model: M, split: &SplitPlan, patches: &PatchSet, config: &TrainConfig) -> Result<(M, TrainReport)> {
    let tr = patches.select(split, Subset::Train, config.entropy_threshold)?;
    let va = patches.select(split, Subset::Val, config.entropy_threshold)?;
    fit(model, &tr, &va, &patches.class_names, patches.forger, config)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub train_patches: usize,
    pub val_patches: usize,
    pub min_val_loss: f64,
    pub val_accuracy: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteTable {
    pub model_id: String,
    pub splits: Vec<SplitResult>,
    pub mean_min_val_loss: f64,
    pub mean_val_accuracy: f64,
    pub std_val_accuracy: f64,
}

impl SuiteTable {
    pub fn from_results(model_id: impl Into<String>, splits: Vec<SplitResult>) -> Self {
        let accs: Vec<f64> = splits.iter().map(|s| s.val_accuracy).collect();
        let losses: Vec<f64> = splits.iter().map(|s| s.min_val_loss).collect();
        let (mean_val_accuracy, std_val_accuracy) = mean_std(&accs);
        Self {
            model_id: model_id.into(),
            mean_min_val_loss: mean_std(&losses).0,
            mean_val_accuracy,
            std_val_accuracy,
            splits,
        }
    }
}

/// Trains one model per split. A split with seed `s` uses init seed
/// `config.seed + s` and shuffle seed `config.shuffle_seed + s`.
pub fn suite_run(
    spec: &ModelSpec,
    splits: &[SplitPlan],
    patches: &PatchSet,
    config: &TrainConfig,
) -> Result<(Vec<(AnyModel, TrainReport)>, SuiteTable)> {
    if splits.is_empty() {
        return Err(Error::Empty("split list"));
    }
    let mut trained = Vec::with_capacity(splits.len());
    let mut rows = Vec::with_capacity(splits.len());
    for (i, split) in splits.iter().enumerate() {
        let cfg = TrainConfig {
            seed: config.seed.wrapping_add(split.seed),
            shuffle_seed: config.shuffle_seed.wrapping_add(split.seed),
            ..config.clone()
        };
        let model = spec.build(patches.n_classes(), cfg.seed)?;
        let (m, mut report) = train(model, split, patches, &cfg)?;
        report.model_id = spec.id();
        rows.push(SplitResult {
            split: i,
            train_patches: report.train_patches,
            val_patches: report.val_patches,
            min_val_loss: report.min_val_loss,
            val_accuracy: report.val_accuracy,
            best_epoch: report.best_epoch,
        });
        trained.push((m, report));
    }
    Ok((trained, SuiteTable::from_results(spec.id(), rows)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: PatchNetSize,
    pub params: usize,
    pub min_val_loss: f64,
    pub val_accuracy: f64,
}

/// One PatchNet per size under the same split and seeds, sorted by size.
pub fn size_sweep(
    patches: &PatchSet,
    split: &SplitPlan,
    sizes: &[PatchNetSize],
    input_side: usize,
    config: &TrainConfig,
) -> Result<Vec<SizeRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("size sweep needs at least one size".into()));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let spec = ModelSpec::Patchnet { size, input_side };
            let model = spec.build(patches.n_classes(), config.seed)?;
            let params = model.param_count();
            let (_, report) = train(model, split, patches, config)?;
            Ok(SizeRow {
                size,
                params,
                min_val_loss: report.min_val_loss,
                val_accuracy: report.val_accuracy,
            })
        })
        .collect()
}

/// One row of an entropy-threshold comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: Option<f64>,
    /// Retained patches in the first split's train and val sets.
    pub train_patches: usize,
    pub val_patches: usize,
    pub min_val_loss: f64,
    pub avg_val_accuracy: f64,
    pub std_val_accuracy: f64,
}

/// Runs the suite once per threshold.
pub fn threshold_sweep(
    spec: &ModelSpec,
    splits: &[SplitPlan],
    patches: &PatchSet,
    thresholds: &[Option<f64>],
    config: &TrainConfig,
) -> Result<Vec<ThresholdRow>> {
    thresholds
        .iter()
        .map(|&threshold| {
            let cfg = TrainConfig {
                entropy_threshold: threshold,
                ..config.clone()
            };
            let (_, table) = suite_run(spec, splits, patches, &cfg)?;
            Ok(ThresholdRow {
                threshold,
                train_patches: table.splits[0].train_patches,
                val_patches: table.splits[0].val_patches,
                min_val_loss: table.mean_min_val_loss,
                avg_val_accuracy: table.mean_val_accuracy,
                std_val_accuracy: table.std_val_accuracy,
            })
        })
        .collect()
}

/// Stacks `(N, len)` inputs into one tensor; test helper for batch shapes.
pub fn stack_inputs(samples: &[&Sample]) -> Result<Tensor<f32>> {
    let len = samples.first().map_or(0, |s| s.input.len());
    if samples.iter().any(|s| s.input.len() != len) {
        return Err(Error::Shape("samples have differing input lengths".into()));
    }
    Ok(Tensor::from_vec(
        vec![samples.len(), len],
        samples.iter().flat_map(|s| s.input.iter().copied()).collect(),
    ))
}
