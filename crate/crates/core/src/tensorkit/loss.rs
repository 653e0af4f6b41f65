use crate::error::{Error, Result};

use super::{Scalar, Tensor};

/// Max-subtracted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone)]
pub struct XentOutput<T> {
    pub loss: T,
    pub probs: Tensor<T>,
    /// `probs − onehot(label)`
    pub grad: Tensor<T>,
}

/// Cross-entropy of a softmax over `logits` against `label`.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, label: usize) -> Result<XentOutput<T>> {
    let z = logits.data();
    if z.len() < 2 {
        return Err(Error::Shape(format!(
            "softmax_xent needs ≥ 2 classes, got {}",
            z.len()
        )));
    }
    if label >= z.len() {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: z.len(),
        });
    }
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    // loss = logsumexp(z) − z[label], evaluated without forming log(p).
    let loss = sum.ln() + max - z[label];
    let probs: Vec<T> = exps.into_iter().map(|e| e / sum).collect();
    let mut grad = probs.clone();
    grad[label] -= T::one();
    Ok(XentOutput {
        loss,
        probs: Tensor::from_vec(vec![z.len()], probs),
        grad: Tensor::from_vec(vec![z.len()], grad),
    })
}
