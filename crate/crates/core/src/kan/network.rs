use super::{KanLayer, KanLayerCache, SplineGrid};
use crate::error::{Error, Result};
use crate::tensorkit::{seeded_rng, Scalar, Tensor};

/// Stack of KAN layers. `widths` includes the input dimension first.
#[derive(Debug, Clone, PartialEq)]
pub struct KanNetwork<T> {
    pub layers: Vec<KanLayer<T>>,
    pub widths: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct KanCache<T> {
    layers: Vec<KanLayerCache<T>>,
}

/// Builds a network for `input_dim` features.
///
/// `widths` lists layer output widths ending in `n_classes`. When it has at
/// least two entries and the first equals `input_dim`, that entry is read as
/// the input layer itself, so `[768, 256, 12]` on 768 inputs gives two layers.
pub fn build_kan<T: Scalar>(
    input_dim: usize,
    widths: &[usize],
    grid: SplineGrid,
    n_classes: usize,
    seed: u64,
) -> Result<KanNetwork<T>> {
    let Some(&last) = widths.last() else {
        return Err(Error::InvalidArgument("KAN widths must not be empty".into()));
    };
    if input_dim == 0 || widths.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "KAN widths must be positive, got input {input_dim} and {widths:?}"
        )));
    }
    if last != n_classes {
        return Err(Error::InvalidArgument(format!(
            "last KAN width {last} must equal the class count {n_classes}"
        )));
    }
    let mut full = vec![input_dim];
    if widths.len() >= 2 && widths[0] == input_dim {
        full.extend_from_slice(&widths[1..]);
    } else {
        full.extend_from_slice(widths);
    }
    let mut rng = seeded_rng(seed, 0);
    let layers = full
        .windows(2)
        .map(|w| KanLayer::init(w[0], w[1], grid.clone(), &mut rng))
        .collect();
    Ok(KanNetwork { layers, widths: full })
}

impl<T: Scalar> KanNetwork<T> {
    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().expect("non-empty widths")
    }

    pub fn grid(&self) -> &SplineGrid {
        &self.layers[0].grid
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(KanLayer::param_count).sum()
    }

    /// Row-major `(n, input_dim)` in, `(n, n_classes)` logits out.
    pub fn forward_batch(&self, inputs: &[T], n: usize) -> Result<(Vec<T>, KanCache<T>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = inputs.to_vec();
        for layer in &self.layers {
            let (out, cache) = layer.forward_batch(&h, n)?;
            caches.push(cache);
            h = out;
        }
        Ok((h, KanCache { layers: caches }))
    }

    /// Parameter gradients in [`Self::params`] order.
    pub fn backward_batch(&self, cache: &KanCache<T>, grad_logits: &[T]) -> Result<Vec<Tensor<T>>> {
        let mut grads = Vec::with_capacity(3 * self.layers.len());
        let mut up = grad_logits.to_vec();
        for (layer, c) in self.layers.iter().zip(&cache.layers).rev() {
            let g = layer.backward_batch(c, &up)?;
            grads.push(g.grad_coeffs);
            grads.push(g.grad_spline_scale);
            grads.push(g.grad_base);
            up = g.grad_x.into_data();
        }
        grads.reverse();
        Ok(grads)
    }

    /// `[base, scale, coeffs]` per layer, input side first.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers
            .iter()
            .flat_map(|l| [&l.base_weights, &l.spline_weights, &l.spline_coeffs])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.base_weights, &mut l.spline_weights, &mut l.spline_coeffs])
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> KanNetwork<U> {
        KanNetwork {
            layers: self
                .layers
                .iter()
                .map(|l| KanLayer {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    base_weights: l.base_weights.cast(),
                    spline_weights: l.spline_weights.cast(),
                    spline_coeffs: l.spline_coeffs.cast(),
                    grid: l.grid.clone(),
                })
                .collect(),
            widths: self.widths.clone(),
        }
    }

    /// Replaces all parameters, checking shapes.
    pub fn load_params(&mut self, params: Vec<Tensor<T>>) -> Result<()> {
        let mut slots = self.params_mut();
        if slots.len() != params.len() {
            return Err(Error::Shape(format!(
                "KAN expects {} parameter tensors, got {}",
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
}
