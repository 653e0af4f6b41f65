use crate::error::{Error, Result};

use super::{matmul, Scalar, Tensor};

pub fn conv_output_dim(input: usize, k: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - k) / stride + 1
}

/// Unfold a `(C, H, W)` buffer into a `(C·k·k) × (OH·OW)` patch matrix.
pub fn im2col<T: Scalar>(
    input: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> (Vec<T>, usize, usize) {
    let oh = conv_output_dim(h, k, stride, pad);
    let ow = conv_output_dim(w, k, stride, pad);
    let cols_n = oh * ow;
    let mut cols = vec![T::zero(); c * k * k * cols_n];
    for ci in 0..c {
        let plane = &input[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * cols_n..(row + 1) * cols_n];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let out = &mut dst[oy * ow..(oy + 1) * ow];
                    if stride == 1 {
                        // Contiguous run: ix = ox + kx - pad.
                        let lo = pad.saturating_sub(kx).min(ow);
                        let hi = (w + pad).saturating_sub(kx).min(ow);
                        if lo < hi {
                            let s0 = lo + kx - pad;
                            out[lo..hi].copy_from_slice(&src[s0..s0 + (hi - lo)]);
                        }
                    } else {
                        for (ox, o) in out.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix >= 0 && ix < w as isize {
                                *o = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    (cols, oh, ow)
}

/// Fold a patch matrix back, summing overlapping contributions.
#[allow(clippy::too_many_arguments)]
pub fn col2im<T: Scalar>(
    cols: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let oh = conv_output_dim(h, k, stride, pad);
    let ow = conv_output_dim(w, k, stride, pad);
    let cols_n = oh * ow;
    let mut out = vec![T::zero(); c * h * w];
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * cols_n..(row + 1) * cols_n];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let base = ci * h * w + iy as usize * w;
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            out[base + ix as usize] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_shapes<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<(usize, usize, usize, usize, usize)> {
    let (is, ks) = (input.shape(), kernels.shape());
    if is.len() != 3 || ks.len() != 4 {
        return Err(Error::Shape(format!(
            "conv2d expects (C,H,W) input and (Co,Ci,k,k) kernels, got {is:?} and {ks:?}"
        )));
    }
    if ks[1] != is[0] || ks[2] != ks[3] {
        return Err(Error::Shape(format!(
            "kernel {ks:?} incompatible with input {is:?}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be ≥ 1".into()));
    }
    let k = ks[2];
    if is[1] + 2 * pad < k || is[2] + 2 * pad < k {
        return Err(Error::Shape(format!(
            "kernel {k} larger than padded input {is:?}"
        )));
    }
    Ok((is[0], is[1], is[2], ks[0], k))
}

/// Cross-correlation of `(C_in, H, W)` with `(C_out, C_in, k, k)` kernels.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    let (c, h, w, co, k) = check_shapes(input, kernels, stride, pad)?;
    let (cols, oh, ow) = im2col(input.data(), c, h, w, k, stride, pad);
    let mut out = vec![T::zero(); co * oh * ow];
    matmul(kernels.data(), &cols, &mut out, co, c * k * k, oh * ow, false, false, false);
    Ok(Tensor::from_vec(vec![co, oh, ow], out))
}

/// Gradients of `conv2d` with respect to its input and kernels.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (c, h, w, co, k) = check_shapes(input, kernels, stride, pad)?;
    let (cols, oh, ow) = im2col(input.data(), c, h, w, k, stride, pad);
    if grad_out.shape() != [co, oh, ow] {
        return Err(Error::Shape(format!(
            "grad_out {:?} does not match conv output {:?}",
            grad_out.shape(),
            [co, oh, ow]
        )));
    }
    let ckk = c * k * k;
    let mut gk = vec![T::zero(); co * ckk];
    matmul(grad_out.data(), &cols, &mut gk, co, oh * ow, ckk, false, true, false);
    let mut gcols = vec![T::zero(); ckk * oh * ow];
    matmul(kernels.data(), grad_out.data(), &mut gcols, ckk, co, oh * ow, true, false, false);
    let gin = col2im(&gcols, c, h, w, k, stride, pad);
    Ok((
        Tensor::from_vec(vec![c, h, w], gin),
        Tensor::from_vec(kernels.shape().to_vec(), gk),
    ))
}
