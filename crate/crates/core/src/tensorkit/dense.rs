use crate::error::{Error, Result};

use super::{matmul, Scalar, Tensor};

/// `y = x·Wᵀ + b` for `x` of shape `(in)` or `(N, in)`, `W` of shape
/// `(out, in)` and `b` of shape `(out)`.
pub fn dense<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, din, dout) = dims(x, w, b)?;
    let mut y = Vec::with_capacity(n * dout);
    for _ in 0..n {
        y.extend_from_slice(b.data());
    }
    matmul(x.data(), w.data(), &mut y, n, din, dout, false, true, true);
    let shape = if x.shape().len() == 1 { vec![dout] } else { vec![n, dout] };
    Ok(Tensor::from_vec(shape, y))
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_y: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let dout = w.shape()[0];
    let b = Tensor::zeros(vec![dout]);
    let (n, din, dout) = dims(x, w, &b)?;
    if grad_y.len() != n * dout {
        return Err(Error::Shape(format!(
            "grad_y has {} elements, expected {}",
            grad_y.len(),
            n * dout
        )));
    }
    let mut gx = vec![T::zero(); n * din];
    matmul(grad_y.data(), w.data(), &mut gx, n, dout, din, false, false, false);
    let mut gw = vec![T::zero(); dout * din];
    matmul(grad_y.data(), x.data(), &mut gw, dout, n, din, true, false, false);
    let mut gb = vec![T::zero(); dout];
    for row in grad_y.data().chunks_exact(dout) {
        for (g, &v) in gb.iter_mut().zip(row) {
            *g += v;
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), gx),
        Tensor::from_vec(w.shape().to_vec(), gw),
        Tensor::from_vec(vec![dout], gb),
    ))
}

fn dims<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if w.shape().len() != 2 {
        return Err(Error::Shape(format!("dense weights must be 2-D, got {:?}", w.shape())));
    }
    let (dout, din) = (w.shape()[0], w.shape()[1]);
    let n = match x.shape() {
        [d] if *d == din => 1,
        [n, d] if *d == din => *n,
        s => {
            return Err(Error::Shape(format!(
                "dense input {s:?} incompatible with weights {:?}",
                w.shape()
            )))
        }
    };
    if b.shape() != [dout] {
        return Err(Error::Shape(format!("bias {:?} must be ({dout})", b.shape())));
    }
    Ok((n, din, dout))
}
