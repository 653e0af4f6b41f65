//! Dense tensors with explicit forward/backward layer kernels and
//! first-order optimizers, shared by the KAN and CNN classifiers.
//!
//! Everything is generic over [`Scalar`] so the same code trains in `f32`
//! and is gradient-checked in `f64`.

mod activation;
mod checkpoint;
mod conv;
pub mod gradcheck;
mod dense;
mod init;
mod loss;
mod optim;
mod pool;
mod scalar;
mod tensor;

pub use activation::{relu, relu_backward, sigmoid, silu, silu_backward, silu_derivative};
pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use conv::{col2im, conv2d, conv2d_backward, conv_output_dim, im2col};
pub use dense::{dense, dense_backward};
pub use init::{kaiming_uniform, seeded_rng};
pub use loss::{softmax, softmax_xent, XentOutput};
pub use optim::{Optimizer, OptimizerConfig};
pub use pool::{
    global_avg_pool, global_avg_pool_backward, maxpool2d, maxpool2d_backward, MaxPoolOutput,
};
pub use scalar::{matmul, Scalar};
pub use tensor::Tensor;
