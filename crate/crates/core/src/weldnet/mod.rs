//! Windowed autoencoders with latent propagators, joined across windows by
//! transcoders.

pub mod config;
pub mod model;
pub mod train;
pub mod window;

pub use config::{Architecture, TrainConfig, Variant};
pub use model::{model_kind, with_time, EpochRecord, LatentCode, StageTrace, WeldModel, WindowModel, MANIFEST_FILE};
pub use train::{train_weldnet, train_window, Parallelism, WindowData};
pub use window::{split_windows, WindowLayout};
