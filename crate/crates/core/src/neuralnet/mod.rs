//! Minimal tensor and backprop code, the intention-conditioned controller
//! nets and their training recipe.

pub mod checkpoint;
mod layers;
mod net;
mod optim;
mod tensor;
mod train;

pub use layers::{
    concat, concat_backward, mean_pool, mean_pool_backward, mse, relu, relu_backward, tanh, tanh_backward, Conv2d,
    ConvCache, Linear,
};
pub use net::{
    images_to_tensor, lpe_to_tensor, Encoder, EncoderCache, IntentBatch, IntentionNet, NetCache, NetConfig, NetKind,
    ParamMut,
};
pub use optim::{lr_at, RmsProp};
pub use tensor::{gemm, Real, Tensor};
pub use train::{batch_inputs, evaluate, train, BatchIntent, EpochLog, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bad net config: {0}")]
    Config(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("dataset: {0}")]
    Data(String),
}
