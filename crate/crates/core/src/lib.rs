pub mod baselines;
pub mod error;
pub mod eval;
pub mod id;
pub mod neural;
pub mod pde;
pub mod reduction;
pub mod rng;
pub mod weldnet;

pub use error::{Result, WeldError};
