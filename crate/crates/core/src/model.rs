//! Common interface over the two classifier families and their checkpoints.

use serde::{Deserialize, Serialize};

use crate::cnn::{build_patchnet, PatchNet, PatchNetCache, PatchNetConfig, PatchNetSize};
use crate::error::{Error, Result};
use crate::kan::{build_kan, KanCache, KanNetwork, SplineGrid};
use crate::patching::TensorLayout;
use crate::tensorkit::{Checkpoint, Scalar, Tensor};

/// Batched classifier with explicit forward and backward passes.
pub trait Classifier<T: Scalar>: Clone {
    type Cache;

    fn n_classes(&self) -> usize;
    fn input_len(&self) -> usize;
    /// Logits for every sample, concatenated row-major.
    fn forward(&self, batch: &[&[T]]) -> Result<(Vec<T>, Self::Cache)>;
    /// Parameter gradients in [`Classifier::params`] order.
    fn backward(&self, cache: &Self::Cache, grad_logits: &[T]) -> Result<Vec<Tensor<T>>>;
    fn params(&self) -> Vec<&Tensor<T>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>>;
}

impl<T: Scalar> Classifier<T> for KanNetwork<T> {
    type Cache = KanCache<T>;

    fn n_classes(&self) -> usize {
        KanNetwork::n_classes(self)
    }
    fn input_len(&self) -> usize {
        self.input_dim()
    }
    fn forward(&self, batch: &[&[T]]) -> Result<(Vec<T>, KanCache<T>)> {
        let flat: Vec<T> = batch.iter().flat_map(|x| x.iter().copied()).collect();
        if flat.len() != batch.len() * self.input_dim() {
            return Err(Error::Shape(format!(
                "KAN expects {} inputs per sample",
                self.input_dim()
            )));
        }
        self.forward_batch(&flat, batch.len())
    }
    fn backward(&self, cache: &KanCache<T>, grad_logits: &[T]) -> Result<Vec<Tensor<T>>> {
        self.backward_batch(cache, grad_logits)
    }
    fn params(&self) -> Vec<&Tensor<T>> {
        KanNetwork::params(self)
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        KanNetwork::params_mut(self)
    }
}

impl<T: Scalar> Classifier<T> for PatchNet<T> {
    type Cache = PatchNetCache<T>;

    fn n_classes(&self) -> usize {
        PatchNet::n_classes(self)
    }
    fn input_len(&self) -> usize {
        PatchNet::input_len(self)
    }
    fn forward(&self, batch: &[&[T]]) -> Result<(Vec<T>, PatchNetCache<T>)> {
        self.forward_batch(batch)
    }
    fn backward(&self, cache: &PatchNetCache<T>, grad_logits: &[T]) -> Result<Vec<Tensor<T>>> {
        self.backward_batch(cache, grad_logits)
    }
    fn params(&self) -> Vec<&Tensor<T>> {
        PatchNet::params(self)
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        PatchNet::params_mut(self)
    }
}

/// Architecture choice as written in run configs and checkpoint headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Kan {
        widths: Vec<usize>,
        #[serde(default = "default_kan_side")]
        input_side: usize,
        #[serde(default)]
        grid: SplineGrid,
    },
    Patchnet {
        size: PatchNetSize,
        #[serde(default = "default_cnn_side")]
        input_side: usize,
    },
}

fn default_kan_side() -> usize {
    16
}

fn default_cnn_side() -> usize {
    32
}

impl ModelSpec {
    pub fn kan(widths: Vec<usize>) -> Self {
        ModelSpec::Kan {
            widths,
            input_side: default_kan_side(),
            grid: SplineGrid::default(),
        }
    }

    pub fn patchnet(size: PatchNetSize) -> Self {
        ModelSpec::Patchnet {
            size,
            input_side: default_cnn_side(),
        }
    }

    /// `kan` or `patchnet-S{n}`; the part before `-` names the family.
    pub fn id(&self) -> String {
        match self {
            ModelSpec::Kan { .. } => "kan".into(),
            ModelSpec::Patchnet { size, .. } => format!("patchnet-{size}"),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Kan { .. } => "kan",
            ModelSpec::Patchnet { .. } => "patchnet",
        }
    }

    pub fn input_side(&self) -> usize {
        match self {
            ModelSpec::Kan { input_side, .. } | ModelSpec::Patchnet { input_side, .. } => *input_side,
        }
    }

    pub fn layout(&self) -> TensorLayout {
        match self {
            ModelSpec::Kan { .. } => TensorLayout::Flat,
            ModelSpec::Patchnet { .. } => TensorLayout::Chw,
        }
    }

    pub fn build(&self, n_classes: usize, seed: u64) -> Result<AnyModel> {
        Ok(match self {
            ModelSpec::Kan {
                widths,
                input_side,
                grid,
            } => AnyModel::Kan(build_kan(3 * input_side * input_side, widths, grid.clone(), n_classes, seed)?),
            ModelSpec::Patchnet { size, input_side } => {
                AnyModel::Patchnet(build_patchnet(PatchNetConfig::preset(*size, n_classes), *input_side, seed)?)
            }
        })
    }
}

/// A 32-bit model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Kan(KanNetwork<f32>),
    Patchnet(PatchNet<f32>),
}

pub enum AnyCache {
    Kan(KanCache<f32>),
    Patchnet(PatchNetCache<f32>),
}

impl AnyModel {
    pub fn arch(&self) -> String {
        match self {
            AnyModel::Kan(_) => "kan".into(),
            AnyModel::Patchnet(n) => n.arch(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Checkpoint whose header carries `spec`, the class count and `extra`.
    pub fn to_checkpoint(&self, spec: &ModelSpec, seed: u64, epoch: usize, extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "model": spec,
            "n_classes": Classifier::<f32>::n_classes(self),
            "run": extra,
        });
        let params = self.params().into_iter().cloned().collect();
        Checkpoint::new(self.arch(), params, seed, epoch, meta)
    }

    /// Rebuilds the architecture from the header and loads the parameters.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, ModelSpec)> {
        let meta = &ckpt.header.meta;
        let spec: ModelSpec = serde_json::from_value(meta["model"].clone())
            .map_err(|e| Error::InvalidArgument(format!("checkpoint header lacks a model spec: {e}")))?;
        let n_classes = meta["n_classes"]
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument("checkpoint header lacks n_classes".into()))?
            as usize;
        let mut model = spec.build(n_classes, ckpt.header.seed)?;
        if model.arch() != ckpt.header.arch {
            return Err(Error::InvalidArgument(format!(
                "checkpoint arch {} does not match its model spec {}",
                ckpt.header.arch,
                model.arch()
            )));
        }
        match &mut model {
            AnyModel::Kan(n) => n.load_params(ckpt.params.clone())?,
            AnyModel::Patchnet(n) => n.load_params(ckpt.params.clone())?,
        }
        Ok((model, spec))
    }
}

impl Classifier<f32> for AnyModel {
    type Cache = AnyCache;

    fn n_classes(&self) -> usize {
        match self {
            AnyModel::Kan(n) => Classifier::n_classes(n),
            AnyModel::Patchnet(n) => Classifier::n_classes(n),
        }
    }
    fn input_len(&self) -> usize {
        match self {
            AnyModel::Kan(n) => Classifier::input_len(n),
            AnyModel::Patchnet(n) => Classifier::input_len(n),
        }
    }
    fn forward(&self, batch: &[&[f32]]) -> Result<(Vec<f32>, AnyCache)> {
        Ok(match self {
            AnyModel::Kan(n) => {
                let (y, c) = Classifier::forward(n, batch)?;
                (y, AnyCache::Kan(c))
            }
            AnyModel::Patchnet(n) => {
                let (y, c) = Classifier::forward(n, batch)?;
                (y, AnyCache::Patchnet(c))
            }
        })
    }
    fn backward(&self, cache: &AnyCache, grad_logits: &[f32]) -> Result<Vec<Tensor<f32>>> {
        match (self, cache) {
            (AnyModel::Kan(n), AnyCache::Kan(c)) => n.backward_batch(c, grad_logits),
            (AnyModel::Patchnet(n), AnyCache::Patchnet(c)) => n.backward_batch(c, grad_logits),
            _ => Err(Error::Shape("cache belongs to a different model family".into())),
        }
    }
    fn params(&self) -> Vec<&Tensor<f32>> {
        match self {
            AnyModel::Kan(n) => KanNetwork::params(n),
            AnyModel::Patchnet(n) => PatchNet::params(n),
        }
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<f32>> {
        match self {
            AnyModel::Kan(n) => KanNetwork::params_mut(n),
            AnyModel::Patchnet(n) => PatchNet::params_mut(n),
        }
    }
}
