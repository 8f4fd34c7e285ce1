use super::matrix::Matrix;
use super::mlp::{ForwardCache, MlpGrads, MlpNet, MlpSpec, Params};
use crate::error::{Result, WeldError};

/// Displacement network `z -> z + f(z)` wrapping a square MLP `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualNet {
    inner: MlpNet,
}

impl ResidualNet {
    pub fn new(inner: MlpNet) -> Result<Self> {
        if inner.input_dim() != inner.output_dim() {
            return Err(WeldError::shape("ResidualNet", inner.input_dim(), inner.output_dim()));
        }
        Ok(ResidualNet { inner })
    }

    pub fn init(dim: usize, width: usize, depth: usize, seed: u64) -> Result<Self> {
        ResidualNet::new(MlpNet::init(MlpSpec::uniform(dim, width, depth, dim), seed)?)
    }

    /// Residual net whose inner map is identically zero, i.e. the identity.
    pub fn zero(dim: usize, width: usize, depth: usize) -> Result<Self> {
        ResidualNet::new(MlpNet::zeros(MlpSpec::uniform(dim, width, depth, dim))?)
    }

    pub fn inner(&self) -> &MlpNet {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut MlpNet {
        &mut self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.input_dim()
    }

    pub fn forward(&self, z: &Matrix) -> Result<(Matrix, ForwardCache)> {
        let (mut y, cache) = self.inner.forward(z)?;
        y.add_assign(z)?;
        Ok((y, cache))
    }

    pub fn predict(&self, z: &Matrix) -> Result<Matrix> {
        let mut y = self.inner.predict(z)?;
        y.add_assign(z)?;
        Ok(y)
    }

    /// Gradient of the residual map: the inner gradient plus the identity
    /// path `dz += grad_output`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<(MlpGrads, Matrix)> {
        let (g, mut dz) = self.inner.backward(cache, grad_output)?;
        dz.add_assign(grad_output)?;
        Ok((g, dz))
    }
}

impl Params for ResidualNet {
    fn tensors(&self) -> Vec<&[f64]> {
        self.inner.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.inner.tensors_mut()
    }
}
