//! A small feed-forward engine for the wave-aligned 1D CNN.
//!
//! The layer vocabulary is deliberately tiny: 1D convolution, flatten and a
//! dense head squashed through a sigmoid. That is enough to express the
//! mortality classifier (conv 8x1/1 -> conv 16x5/5 -> flatten -> dense 1)
//! while keeping backprop hand-checkable. Everything runs in f64 on a single
//! thread; given a seed, training is bit-for-bit reproducible.

mod activation;
mod adam;
mod checkpoint;
mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use activation::{Activation, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use layers::{conv1d_forward, ConvLayerParams};
pub use loss::{bce_logit_grad, bce_loss, clamp_prob, PROB_CLAMP};
pub use model::{backward, forward, predict_proba, ForwardCache, LayerSpec, ModelSpec, ParamSet, Shape};
pub use tensor::Tensor;
pub use train::{train, EarlyStopping, EpochStats, History, TrainConfig, TrainOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{layer}: {details}")]
    Shape { layer: String, details: String },
    #[error("unknown activation {got:?}; valid names are relu, selu, elu, swish, leaky_relu")]
    UnknownActivation { got: String },
    #[error("invalid model: {0}")]
    BadModel(String),
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteTrainLoss { epoch: usize, batch: usize },
    #[error("non-finite validation loss at epoch {epoch}")]
    NonFiniteValLoss { epoch: usize },
    #[error("checkpoint version {got} is not supported (this build reads version {expected})")]
    CheckpointVersion { got: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint serialization: {0}")]
    Json(#[from] serde_json::Error),
}
