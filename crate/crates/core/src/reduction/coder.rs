//! The encoder/decoder pair of one window, either neural or PCA.

use super::pca::PcaModel;
use crate::error::Result;
use crate::neural::{Matrix, MlpNet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoderKind {
    #[serde(alias = "ff")]
    Neural,
    Pca,
}

#[derive(Clone, Debug)]
pub enum Coder {
    Neural { encoder: MlpNet, decoder: MlpNet },
    Pca(PcaModel),
}

impl Coder {
    pub fn kind(&self) -> CoderKind {
        match self {
            Coder::Neural { .. } => CoderKind::Neural,
            Coder::Pca(_) => CoderKind::Pca,
        }
    }

    pub fn latent_dim(&self) -> usize {
        match self {
            Coder::Neural { encoder, .. } => encoder.spec().output_dim,
            Coder::Pca(p) => p.latent_dim(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Coder::Neural { encoder, .. } => encoder.spec().input_dim,
            Coder::Pca(p) => p.ambient_dim(),
        }
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Coder::Neural { encoder, .. } => encoder.predict(x),
            Coder::Pca(p) => p.encode(x),
        }
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        match self {
            Coder::Neural { decoder, .. } => decoder.predict(z),
            Coder::Pca(p) => p.decode(z),
        }
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?)
    }
}
