//! PatchNet: a small from-scratch convolutional classifier family.
//!
//! Layout: stem conv → stages of `blocks × (conv 3×3 + relu)` followed by a
//! 2×2 max-pool → global average pool → dense + relu → dense logits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorkit::{
    conv2d, conv2d_backward, global_avg_pool, global_avg_pool_backward, kaiming_uniform, matmul,
    maxpool2d, maxpool2d_backward, seeded_rng, Scalar, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatchNetSize {
    S0,
    S1,
    S2,
}

impl PatchNetSize {
    pub const ALL: [PatchNetSize; 3] = [PatchNetSize::S0, PatchNetSize::S1, PatchNetSize::S2];
}

impl fmt::Display for PatchNetSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatchNetSize::S0 => "S0",
            PatchNetSize::S1 => "S1",
            PatchNetSize::S2 => "S2",
        })
    }
}

impl FromStr for PatchNetSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S0" | "s0" => Ok(PatchNetSize::S0),
            "S1" | "s1" => Ok(PatchNetSize::S1),
            "S2" | "s2" => Ok(PatchNetSize::S2),
            other => Err(Error::InvalidArgument(format!("unknown PatchNet size \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchNetConfig {
    pub size: PatchNetSize,
    pub stem: usize,
    /// `(channels, blocks)` per stage.
    pub stages: Vec<(usize, usize)>,
    pub head: usize,
    pub n_classes: usize,
}

impl PatchNetConfig {
    pub fn preset(size: PatchNetSize, n_classes: usize) -> Self {
        let (stem, stages, head) = match size {
            PatchNetSize::S0 => (16, vec![(32, 1), (64, 1)], 64),
            PatchNetSize::S1 => (32, vec![(64, 1), (128, 1)], 128),
            PatchNetSize::S2 => (32, vec![(64, 2), (128, 2)], 128),
        };
        Self {
            size,
            stem,
            stages,
            head,
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.stem > 0
            && self.head > 0
            && self.n_classes >= 2
            && !self.stages.is_empty()
            && self.stages.iter().all(|&(c, b)| c > 0 && b > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid PatchNet config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Conv<T> {
    w: Tensor<T>,
    b: Tensor<T>,
}

impl<T: Scalar> Conv<T> {
    fn init(cin: usize, cout: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        Self {
            w: kaiming_uniform(vec![cout, cin, 3, 3], cin * 9, rng),
            b: Tensor::zeros(vec![cout]),
        }
    }

    fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut y = conv2d(x, &self.w, 1, 1)?;
        let hw = y.shape()[1] * y.shape()[2];
        for (plane, &b) in y.data_mut().chunks_exact_mut(hw).zip(self.b.data()) {
            for v in plane {
                *v += b;
            }
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchNet<T> {
    pub config: PatchNetConfig,
    pub input_side: usize,
    convs: Vec<Conv<T>>,
    /// Indices into `convs` after which a 2×2 max-pool runs.
    pool_after: Vec<usize>,
    head_w: Tensor<T>,
    head_b: Tensor<T>,
    out_w: Tensor<T>,
    out_b: Tensor<T>,
}

/// Activations of one sample kept for backward.
#[derive(Debug, Clone)]
struct SampleCache<T> {
    /// Input to each conv.
    conv_in: Vec<Tensor<T>>,
    /// Post-relu output of each conv.
    conv_out: Vec<Tensor<T>>,
    pool_argmax: Vec<Vec<usize>>,
    last_shape: Vec<usize>,
    pooled: Tensor<T>,
    hidden: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct PatchNetCache<T> {
    samples: Vec<SampleCache<T>>,
}

pub fn build_patchnet<T: Scalar>(config: PatchNetConfig, input_side: usize, seed: u64) -> Result<PatchNet<T>> {
    config.validate()?;
    if input_side != 32 && input_side != 64 {
        return Err(Error::InvalidArgument(format!(
            "PatchNet input side must be 32 or 64, got {input_side}"
        )));
    }
    let mut rng = seeded_rng(seed, 0);
    let mut convs = vec![Conv::init(3, config.stem, &mut rng)];
    let mut pool_after = Vec::new();
    let mut c = config.stem;
    for &(ch, blocks) in &config.stages {
        for _ in 0..blocks {
            convs.push(Conv::init(c, ch, &mut rng));
            c = ch;
        }
        pool_after.push(convs.len() - 1);
    }
    let head_w = kaiming_uniform(vec![config.head, c], c, &mut rng);
    let out_w = kaiming_uniform(vec![config.n_classes, config.head], config.head, &mut rng);
    Ok(PatchNet {
        input_side,
        convs,
        pool_after,
        head_b: Tensor::zeros(vec![config.head]),
        out_b: Tensor::zeros(vec![config.n_classes]),
        head_w,
        out_w,
        config,
    })
}

fn relu_inplace<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

impl<T: Scalar> PatchNet<T> {
    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn input_len(&self) -> usize {
        3 * self.input_side * self.input_side
    }

    pub fn arch(&self) -> String {
        format!("patchnet-{}", self.config.size)
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Conv weights and biases in order, then head and output layers.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut v: Vec<&Tensor<T>> = self.convs.iter().flat_map(|c| [&c.w, &c.b]).collect();
        v.extend([&self.head_w, &self.head_b, &self.out_w, &self.out_b]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v: Vec<&mut Tensor<T>> = self.convs.iter_mut().flat_map(|c| [&mut c.w, &mut c.b]).collect();
        v.extend([&mut self.head_w, &mut self.head_b, &mut self.out_w, &mut self.out_b]);
        v
    }

    pub fn load_params(&mut self, params: Vec<Tensor<T>>) -> Result<()> {
        let mut slots = self.params_mut();
        if slots.len() != params.len() {
            return Err(Error::Shape(format!(
                "PatchNet expects {} parameter tensors, got {}",
                slots.len(),
                params.len()
            )));
        }
        for (slot, p) in slots.iter_mut().zip(params) {
            if slot.shape() != p.shape() {
                return Err(Error::Shape(format!(
                    "parameter shape {:?} does not match {:?}",
                    p.shape(),
                    slot.shape()
                )));
            }
            **slot = p;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> PatchNet<U> {
        PatchNet {
            config: self.config.clone(),
            input_side: self.input_side,
            convs: self
                .convs
                .iter()
                .map(|c| Conv {
                    w: c.w.cast(),
                    b: c.b.cast(),
                })
                .collect(),
            pool_after: self.pool_after.clone(),
            head_w: self.head_w.cast(),
            head_b: self.head_b.cast(),
            out_w: self.out_w.cast(),
            out_b: self.out_b.cast(),
        }
    }

    fn forward_one(&self, x: &[T]) -> Result<(Vec<T>, SampleCache<T>)> {
        if x.len() != self.input_len() {
            return Err(Error::Shape(format!(
                "PatchNet expects {} inputs, got {}",
                self.input_len(),
                x.len()
            )));
        }
        let s = self.input_side;
        let mut h = Tensor::from_vec(vec![3, s, s], x.to_vec());
        let mut conv_in = Vec::with_capacity(self.convs.len());
        let mut conv_out = Vec::with_capacity(self.convs.len());
        let mut pool_argmax = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            let mut y = conv.forward(&h)?;
            relu_inplace(&mut y);
            conv_in.push(h);
            conv_out.push(y.clone());
            h = y;
            if self.pool_after.contains(&i) {
                let p = maxpool2d(&h, 2, 2)?;
                pool_argmax.push(p.argmax);
                h = p.output;
            }
        }
        let last_shape = h.shape().to_vec();
        let pooled = global_avg_pool(&h)?;
        let mut hidden = self.head_b.data().to_vec();
        matmul(pooled.data(), self.head_w.data(), &mut hidden, 1, pooled.len(), self.config.head, false, true, true);
        let mut hidden = Tensor::from_vec(vec![self.config.head], hidden);
        relu_inplace(&mut hidden);
        let mut logits = self.out_b.data().to_vec();
        matmul(hidden.data(), self.out_w.data(), &mut logits, 1, self.config.head, self.config.n_classes, false, true, true);
        Ok((
            logits,
            SampleCache {
                conv_in,
                conv_out,
                pool_argmax,
                last_shape,
                pooled,
                hidden,
            },
        ))
    }

    /// Logits for each sample, concatenated row-major.
    pub fn forward_batch(&self, batch: &[&[T]]) -> Result<(Vec<T>, PatchNetCache<T>)> {
        let mut logits = Vec::with_capacity(batch.len() * self.n_classes());
        let mut samples = Vec::with_capacity(batch.len());
        for x in batch {
            let (l, c) = self.forward_one(x)?;
            logits.extend(l);
            samples.push(c);
        }
        Ok((logits, PatchNetCache { samples }))
    }

    /// Parameter gradients in [`Self::params`] order, summed over samples in
    /// batch order.
    pub fn backward_batch(&self, cache: &PatchNetCache<T>, grad_logits: &[T]) -> Result<Vec<Tensor<T>>> {
        let nc = self.n_classes();
        if grad_logits.len() != cache.samples.len() * nc {
            return Err(Error::Shape(format!(
                "grad_logits has {} values, expected {}",
                grad_logits.len(),
                cache.samples.len() * nc
            )));
        }
        let mut grads: Vec<Tensor<T>> = self.params().iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        let n_conv = self.convs.len();
        let head = self.config.head;
        for (sc, gl) in cache.samples.iter().zip(grad_logits.chunks_exact(nc)) {
            let base = 2 * n_conv;
            // Output layer.
            matmul(gl, sc.hidden.data(), grads[base + 2].data_mut(), nc, 1, head, true, false, true);
            grads[base + 3].add_assign(&Tensor::from_vec(vec![nc], gl.to_vec()));
            let mut gh = vec![T::zero(); head];
            matmul(gl, self.out_w.data(), &mut gh, 1, nc, head, false, false, false);
            for (g, &h) in gh.iter_mut().zip(sc.hidden.data()) {
                if h <= T::zero() {
                    *g = T::zero();
                }
            }
            // Head layer.
            let cin = sc.pooled.len();
            matmul(&gh, sc.pooled.data(), grads[base].data_mut(), head, 1, cin, true, false, true);
            grads[base + 1].add_assign(&Tensor::from_vec(vec![head], gh.clone()));
            let mut gp = vec![T::zero(); cin];
            matmul(&gh, self.head_w.data(), &mut gp, 1, head, cin, false, false, false);
            let mut g = global_avg_pool_backward(&Tensor::from_vec(vec![cin], gp), &sc.last_shape)?;

            let mut pool_idx = sc.pool_argmax.len();
            for i in (0..n_conv).rev() {
                if self.pool_after.contains(&i) {
                    pool_idx -= 1;
                    g = maxpool2d_backward(&g, &sc.pool_argmax[pool_idx], sc.conv_out[i].shape())?;
                }
                for (gv, &y) in g.data_mut().iter_mut().zip(sc.conv_out[i].data()) {
                    if y <= T::zero() {
                        *gv = T::zero();
                    }
                }
                let (gin, gk) = conv2d_backward(&sc.conv_in[i], &self.convs[i].w, &g, 1, 1)?;
                grads[2 * i].add_assign(&gk);
                let hw = g.shape()[1] * g.shape()[2];
                let gb = grads[2 * i + 1].data_mut();
                for (c, plane) in g.data().chunks_exact(hw).enumerate() {
                    gb[c] += plane.iter().copied().sum::<T>();
                }
                g = gin;
            }
        }
        Ok(grads)
    }
}
