//! Dense matrices, ReLU MLPs with exact backpropagation, AdamW, the plateau
//! learning-rate schedule, residual (displacement) networks, and the
//! checkpoint container they are stored in.

pub mod checkpoint;
pub mod loss;
pub mod matrix;
pub mod mlp;
pub mod optim;
pub mod residual;

pub use loss::{mse_loss, mse_value};
pub use matrix::Matrix;
pub use mlp::{ForwardCache, MlpGrads, MlpNet, MlpSpec, Params};
pub use optim::{AdamW, PlateauSchedule};
pub use residual::ResidualNet;
