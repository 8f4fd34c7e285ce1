//! Linear dimension reduction and the encoder/decoder abstraction shared
//! by PCA and neural coders.

pub mod coder;
pub mod jacobi;
pub mod pca;

pub use coder::{Coder, CoderKind};
pub use jacobi::{symmetric_eigen, SymmetricEigen};
pub use pca::{pca_fit, PcaModel};
