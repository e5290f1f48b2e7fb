//! Dense numeric kernels for the network layers.
//!
//! Every layer is a pair of free functions: a forward map and a hand-written
//! backward map returning exact analytic gradients. Feature maps are stored
//! channel-major (`data[k * length + x]`), all arithmetic is `f64`.
//!
//! The kernels are pure; dropout additionally consumes an explicit RNG.

mod activation;
mod conv;
mod dense;
mod dropout;
mod gemm;
mod loss;
mod pool;
mod tensor;

#[cfg(test)]
pub(crate) mod fdcheck;

pub use activation::{leaky_relu, leaky_relu_backward, leaky_relu_backward_in_place, leaky_relu_in_place};
pub use conv::{conv1d_backward, conv1d_forward, ConvFilterBank, ConvGrads};
pub use dense::{fc_backward, fc_backward_batch, fc_forward, fc_forward_batch, DenseGrads, DenseWeights};
pub use dropout::{dropout, dropout_backward};
pub use loss::{softmax, softmax_cross_entropy, SoftmaxCrossEntropy};
pub use pool::{maxpool2_backward, maxpool2_forward, pooled_length, PoolRecord};
pub use tensor::ChannelMap;

pub(crate) use conv::conv1d_backward_accumulate;
pub(crate) use dense::fc_backward_batch_accumulate;

/// Whether a pass is part of training (dropout active) or inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}
