use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SplineGrid;
use crate::error::{Error, Result};
use crate::tensorkit::{kaiming_uniform, matmul, silu, silu_derivative, Scalar, Tensor};

/// One KAN layer. Output `j` is
/// `Σ_i base[j,i]·silu(x_i) + scale[j,i]·Σ_b coeffs[j,i,b]·B_b(clamp(x_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `(out, in)`
    pub base_weights: Tensor<T>,
    /// `(out, in)`
    pub spline_weights: Tensor<T>,
    /// `(out, in, n_basis)`
    pub spline_coeffs: Tensor<T>,
    pub grid: SplineGrid,
}

/// Per-batch state kept from forward for backward.
#[derive(Debug, Clone)]
pub struct KanLayerCache<T> {
    n: usize,
    inputs: Vec<T>,
    features: Vec<T>,
    effective: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KanLayerGrads<T> {
    pub grad_x: Tensor<T>,
    pub grad_base: Tensor<T>,
    pub grad_spline_scale: Tensor<T>,
    pub grad_coeffs: Tensor<T>,
}

impl<T: Scalar> KanLayer<T> {
    pub fn zeros(in_dim: usize, out_dim: usize, grid: SplineGrid) -> Self {
        let nb = grid.n_basis();
        Self {
            in_dim,
            out_dim,
            base_weights: Tensor::zeros(vec![out_dim, in_dim]),
            spline_weights: Tensor::zeros(vec![out_dim, in_dim]),
            spline_coeffs: Tensor::zeros(vec![out_dim, in_dim, nb]),
            grid,
        }
    }

    /// Kaiming-uniform base weights, unit spline scales and
    /// `Normal(0, 0.1/√n_basis)` spline coefficients.
    pub fn init(in_dim: usize, out_dim: usize, grid: SplineGrid, rng: &mut ChaCha8Rng) -> Self {
        let nb = grid.n_basis();
        let base_weights = kaiming_uniform(vec![out_dim, in_dim], in_dim, rng);
        let normal = Normal::new(0.0, 0.1 / (nb as f64).sqrt()).expect("valid std");
        let coeffs = (0..out_dim * in_dim * nb)
            .map(|_| T::lit(normal.sample(rng)))
            .collect();
        let mut spline_weights = Tensor::zeros(vec![out_dim, in_dim]);
        spline_weights.fill(T::one());
        Self {
            in_dim,
            out_dim,
            base_weights,
            spline_weights,
            spline_coeffs: Tensor::from_vec(vec![out_dim, in_dim, nb], coeffs),
            grid,
        }
    }

    pub fn param_count(&self) -> usize {
        self.base_weights.len() + self.spline_weights.len() + self.spline_coeffs.len()
    }

    fn feature_width(&self) -> usize {
        self.grid.n_basis() + 1
    }

    /// Fold base weights and scaled coefficients into one `(out, in·(n_basis+1))` matrix.
    fn effective_weights(&self) -> Vec<T> {
        let nb = self.grid.n_basis();
        let fw = nb + 1;
        let mut w = vec![T::zero(); self.out_dim * self.in_dim * fw];
        let base = self.base_weights.data();
        let scale = self.spline_weights.data();
        let coeffs = self.spline_coeffs.data();
        for j in 0..self.out_dim {
            for i in 0..self.in_dim {
                let e = j * self.in_dim + i;
                let dst = &mut w[e * fw..(e + 1) * fw];
                dst[0] = base[e];
                for b in 0..nb {
                    dst[1 + b] = scale[e] * coeffs[e * nb + b];
                }
            }
        }
        w
    }

    /// Forward over a row-major `(n, in_dim)` batch, returning `(n, out_dim)`.
    pub fn forward_batch(&self, inputs: &[T], n: usize) -> Result<(Vec<T>, KanLayerCache<T>)> {
        if inputs.len() != n * self.in_dim {
            return Err(Error::Shape(format!(
                "KAN layer expects {} inputs per sample, got {} values for {n} samples",
                self.in_dim,
                inputs.len()
            )));
        }
        let fw = self.feature_width();
        let k = self.grid.order;
        let mut features = vec![T::zero(); n * self.in_dim * fw];
        let mut local = vec![T::zero(); k + 1];
        for (idx, &x) in inputs.iter().enumerate() {
            let f = &mut features[idx * fw..(idx + 1) * fw];
            f[0] = silu(x);
            let xc = T::lit(self.grid.clamp(x.as_f64()));
            let first = self.grid.eval_local(xc, &mut local, None);
            f[1 + first..1 + first + k + 1].copy_from_slice(&local);
        }
        let effective = self.effective_weights();
        let mut out = vec![T::zero(); n * self.out_dim];
        matmul(&features, &effective, &mut out, n, self.in_dim * fw, self.out_dim, false, true, false);
        Ok((
            out,
            KanLayerCache {
                n,
                inputs: inputs.to_vec(),
                features,
                effective,
            },
        ))
    }

    /// Exact gradients given `(n, out_dim)` upstream gradients.
    pub fn backward_batch(&self, cache: &KanLayerCache<T>, upstream: &[T]) -> Result<KanLayerGrads<T>> {
        let n = cache.n;
        if upstream.len() != n * self.out_dim {
            return Err(Error::Shape(format!(
                "upstream gradient has {} values, expected {}",
                upstream.len(),
                n * self.out_dim
            )));
        }
        let nb = self.grid.n_basis();
        let fw = nb + 1;
        let width = self.in_dim * fw;
        let mut d_eff = vec![T::zero(); self.out_dim * width];
        matmul(upstream, &cache.features, &mut d_eff, self.out_dim, n, width, true, false, false);
        let mut d_feat = vec![T::zero(); n * width];
        matmul(upstream, &cache.effective, &mut d_feat, n, self.out_dim, width, false, false, false);

        let scale = self.spline_weights.data();
        let coeffs = self.spline_coeffs.data();
        let edges = self.out_dim * self.in_dim;
        let mut g_base = vec![T::zero(); edges];
        let mut g_scale = vec![T::zero(); edges];
        let mut g_coeffs = vec![T::zero(); edges * nb];
        for e in 0..edges {
            let d = &d_eff[e * fw..(e + 1) * fw];
            g_base[e] = d[0];
            let mut s = T::zero();
            for b in 0..nb {
                s += coeffs[e * nb + b] * d[1 + b];
                g_coeffs[e * nb + b] = scale[e] * d[1 + b];
            }
            g_scale[e] = s;
        }

        let k = self.grid.order;
        let mut vals = vec![T::zero(); k + 1];
        let mut ders = vec![T::zero(); k + 1];
        let (lo, hi) = (self.grid.lo, self.grid.hi);
        let mut g_x = vec![T::zero(); n * self.in_dim];
        for (idx, &x) in cache.inputs.iter().enumerate() {
            let d = &d_feat[idx * fw..(idx + 1) * fw];
            let mut g = d[0] * silu_derivative(x);
            let xf = x.as_f64();
            if (lo..=hi).contains(&xf) {
                let first = self.grid.eval_local(x, &mut vals, Some(&mut ders));
                for r in 0..=k {
                    g += d[1 + first + r] * ders[r];
                }
            }
            g_x[idx] = g;
        }
        Ok(KanLayerGrads {
            grad_x: Tensor::from_vec(vec![n, self.in_dim], g_x),
            grad_base: Tensor::from_vec(vec![self.out_dim, self.in_dim], g_base),
            grad_spline_scale: Tensor::from_vec(vec![self.out_dim, self.in_dim], g_scale),
            grad_coeffs: Tensor::from_vec(vec![self.out_dim, self.in_dim, nb], g_coeffs),
        })
    }
}

/// Single-sample forward.
pub fn kan_layer_forward<T: Scalar>(x: &[T], layer: &KanLayer<T>) -> Result<Vec<T>> {
    Ok(layer.forward_batch(x, 1)?.0)
}

/// Single-sample backward: `(grad_x, grad_base, grad_spline_scale, grad_coeffs)`.
pub fn kan_layer_backward<T: Scalar>(
    x: &[T],
    upstream: &[T],
    layer: &KanLayer<T>,
) -> Result<KanLayerGrads<T>> {
    let (_, cache) = layer.forward_batch(x, 1)?;
    let mut g = layer.backward_batch(&cache, upstream)?;
    g.grad_x = g.grad_x.reshape(vec![layer.in_dim])?;
    Ok(g)
}
