use crate::error::{Error, Result};

use super::{Scalar, Tensor};

pub struct MaxPoolOutput<T> {
    pub output: Tensor<T>,
    /// Flat input index of the winning element for every output element.
    pub argmax: Vec<usize>,
}

/// Max pooling over `(C, H, W)` with a square window. Ties go to the first
/// element in scan order.
pub fn maxpool2d<T: Scalar>(input: &Tensor<T>, size: usize, stride: usize) -> Result<MaxPoolOutput<T>> {
    let s = input.shape();
    if s.len() != 3 || size == 0 || stride == 0 || s[1] < size || s[2] < size {
        return Err(Error::Shape(format!(
            "maxpool2d({size}, {stride}) cannot pool input {s:?}"
        )));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    let oh = (h - size) / stride + 1;
    let ow = (w - size) / stride + 1;
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = ci * h * w + oy * stride * w + ox * stride;
                for dy in 0..size {
                    for dx in 0..size {
                        let idx = ci * h * w + (oy * stride + dy) * w + ox * stride + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok(MaxPoolOutput {
        output: Tensor::from_vec(vec![c, oh, ow], out),
        argmax,
    })
}

pub fn maxpool2d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::Shape("maxpool grad/argmax length mismatch".into()));
    }
    let mut g = Tensor::zeros(input_shape.to_vec());
    let gd = g.data_mut();
    for (&idx, &v) in argmax.iter().zip(grad_out.data()) {
        gd[idx] += v;
    }
    Ok(g)
}

/// `(C, H, W)` → `(C)` spatial mean.
pub fn global_avg_pool<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.len() != 3 || s[1] * s[2] == 0 {
        return Err(Error::Shape(format!("global_avg_pool expects (C,H,W), got {s:?}")));
    }
    let hw = s[1] * s[2];
    let inv = T::lit(1.0 / hw as f64);
    let out = input
        .data()
        .chunks_exact(hw)
        .map(|plane| plane.iter().copied().sum::<T>() * inv)
        .collect();
    Ok(Tensor::from_vec(vec![s[0]], out))
}

pub fn global_avg_pool_backward<T: Scalar>(grad_out: &Tensor<T>, input_shape: &[usize]) -> Result<Tensor<T>> {
    if input_shape.len() != 3 || grad_out.shape() != [input_shape[0]] {
        return Err(Error::Shape("global_avg_pool backward shape mismatch".into()));
    }
    let hw = input_shape[1] * input_shape[2];
    let inv = T::lit(1.0 / hw as f64);
    let mut data = Vec::with_capacity(input_shape[0] * hw);
    for &g in grad_out.data() {
        data.extend(std::iter::repeat_n(g * inv, hw));
    }
    Ok(Tensor::from_vec(input_shape.to_vec(), data))
}
