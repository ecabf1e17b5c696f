//! Autodiff engine, the PhysNet-style network and its training loops.

mod checkpoint;
mod data;
pub mod gradcheck;
mod graph;
mod kernels;
mod lds;
mod model;
mod optim;
mod tensor;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use data::{clip_input, hr_from_predictions, wave_target, Sample};
pub use graph::{Graph, Pool, Var, LOSS_EPS};
pub use lds::{beta_kernel, lds_weights, LdsConfig};
pub use model::{Forward, Heads, Params, PhysNet, PhysNetConfig};
pub use optim::{OneCycle, OptimizerKind, Sgd};
pub use tensor::Tensor;
pub use train::{train_hr, train_spo2, EpochRecord, History, TrainConfig};
