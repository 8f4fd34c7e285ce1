use std::path::Path;

use super::{load_baseline, save_baseline, BaselineConfig, BaselineInfo};
use crate::error::{Result, WeldError};
use crate::neural::{mse_loss, AdamW, Matrix, MlpNet, MlpSpec};
use crate::pde::TrajectoryDataset;
use crate::rng::{derive_seed, stream};
use crate::weldnet::train::{gather, run_stage, shuffled};
use crate::weldnet::TrainConfig;

pub const TIME_INPUT_KIND: &str = "time-input";

/// Regression `(x(0), t) -> x(t)`. Only start-at-zero queries are
/// meaningful: the network never sees any other initial time.
#[derive(Clone, Debug)]
pub struct TimeInputModel {
    pub net: MlpNet,
    pub info: BaselineInfo,
}

pub fn train_time_input(ds: &TrajectoryDataset, cfg: &TrainConfig, bcfg: &BaselineConfig) -> Result<TimeInputModel> {
    cfg.validate()?;
    bcfg.validate()?;
    let split = ds.split(cfg.split_seed, cfg.train_fraction);
    if split.train.is_empty() {
        return Err(WeldError::invalid("training split is empty"));
    }
    let dim = ds.dim();
    let dt = ds.time.dt();
    let seed = derive_seed(cfg.seed, stream::BASELINE + 1);
    let mut net = MlpNet::init(
        MlpSpec::uniform(dim + 1, bcfg.width, bcfg.depth, dim),
        derive_seed(seed, stream::INIT),
    )?;
    // k = 0 is included, so the identity at t = 0 is part of the data.
    let items: Vec<(usize, usize)> = split.train.iter().flat_map(|&n| (0..ds.n_steps()).map(move |k| (n, k))).collect();
    let mut opt = AdamW::new(cfg.lr);
    let trace = run_stage("time-input", 0, bcfg.epochs, cfg, |epoch, lr| {
        opt.lr = lr;
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in shuffled(&items, seed, epoch).chunks(cfg.batch_size) {
            let starts: Vec<_> = chunk.iter().map(|&(n, _)| (n, 0)).collect();
            let times: Vec<f64> = chunk.iter().map(|&(_, k)| k as f64 * dt * bcfg.time_scale).collect();
            let (out, cache) = net.forward(&gather(ds, &starts).with_column(&times))?;
            let (l, g) = mse_loss(&out, &gather(ds, chunk))?;
            let grads = net.backward_params(&cache, &g)?;
            opt.step(&mut net, &grads)?;
            sum += l * chunk.len() as f64;
            count += chunk.len();
        }
        Ok((sum / count.max(1) as f64, None, None))
    })?;
    Ok(TimeInputModel {
        net,
        info: BaselineInfo {
            family: ds.family.clone(),
            ambient_dim: dim,
            n_steps: ds.n_steps(),
            delta_t: dt,
            config: cfg.clone(),
            baseline: bcfg.clone(),
            split,
            traces: vec![trace],
        },
    })
}

impl TimeInputModel {
    /// Prediction at physical time `t` from initial states `x0`.
    pub fn predict_at(&self, x0: &Matrix, t: f64) -> Result<Matrix> {
        if x0.cols() != self.info.ambient_dim {
            return Err(WeldError::shape("time-input model input", self.info.ambient_dim, x0.cols()));
        }
        self.net
            .predict(&x0.with_column(&vec![t * self.info.baseline.time_scale; x0.rows()]))
    }

    /// Prediction at grid index `k`, i.e. `t = k * delta_t`.
    pub fn predict(&self, x0: &Matrix, k: usize) -> Result<Matrix> {
        self.predict_at(x0, k as f64 * self.info.delta_t)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_baseline(dir, TIME_INPUT_KIND, "x0|t", &self.net, &self.info)
    }

    pub fn load(dir: &Path) -> Result<TimeInputModel> {
        let (net, info) = load_baseline(dir, TIME_INPUT_KIND)?;
        Ok(TimeInputModel { net, info })
    }
}
