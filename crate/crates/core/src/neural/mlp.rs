use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Result, WeldError};
use crate::rng;

/// Layer sizes of a ReLU feed-forward network. Every hidden layer is
/// followed by a ReLU; the output layer is affine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Self {
        MlpSpec {
            input_dim,
            hidden_widths,
            output_dim,
        }
    }

    /// `depth` hidden layers of equal `width`.
    pub fn uniform(input_dim: usize, width: usize, depth: usize, output_dim: usize) -> Self {
        MlpSpec::new(input_dim, vec![width; depth], output_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(WeldError::invalid(format!("MLP dimensions must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` per layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &w in self.hidden_widths.iter().chain(std::iter::once(&self.output_dim)) {
            dims.push((prev, w));
            prev = w;
        }
        dims
    }

    pub fn n_layers(&self) -> usize {
        self.hidden_widths.len() + 1
    }

    pub fn n_params(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Trainable parameters exposed as a flat list of tensors in declaration
/// order (`W_0, b_0, W_1, b_1, ...`). Optimizers and checkpoints only see
/// this view.
pub trait Params {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpNet {
    spec: MlpSpec,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Activations saved by [`MlpNet::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: Matrix,
    /// Pre-activation `X W + b` of every layer, output layer included.
    pre: Vec<Matrix>,
    /// ReLU outputs of the hidden layers.
    post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn hidden_activations(&self) -> &[Matrix] {
        &self.post
    }

    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &MlpNet) -> Self {
        MlpGrads {
            weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Accumulates `other` into `self`.
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

impl Params for MlpGrads {
    fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
            .collect()
    }
}

impl Params for MlpNet {
    fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
            .collect()
    }
}

impl MlpNet {
    /// Weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::rng_for(seed, rng::stream::INIT);
        let mut weights = Vec::with_capacity(spec.n_layers());
        let mut biases = Vec::with_capacity(spec.n_layers());
        for (fan_in, fan_out) in spec.layer_dims() {
            let bound = (1.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            weights.push(Matrix::new(fan_in, fan_out, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpNet { spec, weights, biases })
    }

    /// Network with every parameter zero.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let weights = spec.layer_dims().iter().map(|&(i, o)| Matrix::zeros(i, o)).collect();
        let biases = spec.layer_dims().iter().map(|&(_, o)| vec![0.0; o]).collect();
        Ok(MlpNet { spec, weights, biases })
    }

    /// Assembles a network from explicit parameters, checking that shapes chain.
    pub fn from_parts(spec: MlpSpec, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        if weights.len() != dims.len() || biases.len() != dims.len() {
            return Err(WeldError::shape("MlpNet::from_parts", dims.len(), weights.len()));
        }
        for ((w, b), &(i, o)) in weights.iter().zip(&biases).zip(&dims) {
            if w.shape() != (i, o) || b.len() != o {
                return Err(WeldError::shape(
                    "MlpNet::from_parts",
                    format!("{i}x{o}"),
                    format!("{:?} / bias {}", w.shape(), b.len()),
                ));
            }
        }
        Ok(MlpNet { spec, weights, biases })
    }

    /// The width-`2d` ReLU network that reproduces its input exactly:
    /// first layer `[I, -I]`, identity between hidden layers, last layer
    /// `[I; -I]`, all biases zero. Uses `relu(x) - relu(-x) = x`.
    pub fn identity(dim: usize, hidden_layers: usize) -> Result<Self> {
        if hidden_layers == 0 {
            return Err(WeldError::invalid("identity network needs at least one hidden layer"));
        }
        let spec = MlpSpec::uniform(dim, 2 * dim, hidden_layers, dim);
        let mut net = MlpNet::zeros(spec)?;
        let last = net.weights.len() - 1;
        for (l, w) in net.weights.iter_mut().enumerate() {
            if l == 0 {
                for i in 0..dim {
                    w.set(i, i, 1.0);
                    w.set(i, dim + i, -1.0);
                }
            } else if l == last {
                for i in 0..dim {
                    w.set(i, i, 1.0);
                    w.set(dim + i, i, -1.0);
                }
            } else {
                *w = Matrix::identity(2 * dim);
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(batch)?;
        let n = self.weights.len();
        let mut pre = Vec::with_capacity(n);
        let mut post = Vec::with_capacity(n - 1);
        for l in 0..n {
            let x = if l == 0 { batch } else { &post[l - 1] };
            let mut z = x.matmul(&self.weights[l])?;
            z.add_row_broadcast(&self.biases[l]);
            if l + 1 < n {
                let mut a = z.clone();
                relu_in_place(a.data_mut());
                post.push(a);
            }
            pre.push(z);
        }
        let out = pre[n - 1].clone();
        Ok((
            out,
            ForwardCache {
                input: batch.clone(),
                pre,
                post,
            },
        ))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let n = self.weights.len();
        let mut x = batch.matmul(&self.weights[0])?;
        x.add_row_broadcast(&self.biases[0]);
        for l in 1..n {
            relu_in_place(x.data_mut());
            let mut z = x.matmul(&self.weights[l])?;
            z.add_row_broadcast(&self.biases[l]);
            x = z;
        }
        Ok(x)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict(&Matrix::row_vector(x))?.into_data())
    }

    /// Reverse-mode pass. Returns parameter gradients and the gradient with
    /// respect to the input batch. The ReLU derivative at 0 is taken as 0.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<(MlpGrads, Matrix)> {
        let (g, dx) = self.backward_impl(cache, grad_output, true)?;
        Ok((g, dx.expect("input gradient requested")))
    }

    /// Parameter gradients only; skips the input-gradient product of the
    /// first layer.
    pub fn backward_params(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<MlpGrads> {
        Ok(self.backward_impl(cache, grad_output, false)?.0)
    }

    fn backward_impl(&self, cache: &ForwardCache, grad_output: &Matrix, input_grad: bool) -> Result<(MlpGrads, Option<Matrix>)> {
        let n = self.weights.len();
        let b = cache.input.rows();
        if cache.pre.len() != n
            || cache.post.len() + 1 != n
            || cache.input.cols() != self.spec.input_dim
            || cache
                .pre
                .iter()
                .zip(&self.weights)
                .any(|(z, w)| z.cols() != w.cols() || z.rows() != b)
        {
            return Err(WeldError::invalid("forward cache does not match this network"));
        }
        if grad_output.shape() != (b, self.spec.output_dim) {
            return Err(WeldError::shape(
                "MlpNet::backward",
                format!("{b}x{}", self.spec.output_dim),
                format!("{:?}", grad_output.shape()),
            ));
        }
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut delta = grad_output.clone();
        for l in (0..n).rev() {
            let x = if l == 0 { &cache.input } else { &cache.post[l - 1] };
            gw.push(x.t_matmul(&delta)?);
            gb.push(delta.column_sums());
            if l == 0 && !input_grad {
                break;
            }
            let mut dx = delta.matmul_t(&self.weights[l])?;
            if l > 0 {
                for (g, &z) in dx.data_mut().iter_mut().zip(cache.pre[l - 1].data()) {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = dx;
        }
        gw.reverse();
        gb.reverse();
        Ok((MlpGrads { weights: gw, biases: gb }, input_grad.then_some(delta)))
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.spec.input_dim {
            return Err(WeldError::shape("MlpNet input", self.spec.input_dim, batch.cols()));
        }
        Ok(())
    }
}

#[inline]
fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
