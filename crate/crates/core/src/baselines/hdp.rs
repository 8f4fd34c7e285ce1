use std::path::Path;

use super::{load_baseline, save_baseline, BaselineConfig, BaselineInfo};
use crate::error::{Result, WeldError};
use crate::neural::{mse_loss, AdamW, Matrix, MlpNet, MlpSpec};
use crate::pde::TrajectoryDataset;
use crate::rng::{derive_seed, stream};
use crate::weldnet::train::{gather, run_stage, shuffled};
use crate::weldnet::TrainConfig;

pub const HDP_KIND: &str = "hdp";

/// One-step map `x(t_k) -> x(t_{k+1})` learned directly in the ambient
/// space. Deliberately not residual.
#[derive(Clone, Debug)]
pub struct HdpModel {
    pub net: MlpNet,
    pub info: BaselineInfo,
}

pub fn train_hdp(ds: &TrajectoryDataset, cfg: &TrainConfig, bcfg: &BaselineConfig) -> Result<HdpModel> {
    cfg.validate()?;
    bcfg.validate()?;
    let split = ds.split(cfg.split_seed, cfg.train_fraction);
    if split.train.is_empty() {
        return Err(WeldError::invalid("training split is empty"));
    }
    let dim = ds.dim();
    let seed = derive_seed(cfg.seed, stream::BASELINE);
    let mut net = MlpNet::init(MlpSpec::uniform(dim, bcfg.width, bcfg.depth, dim), derive_seed(seed, stream::INIT))?;
    let items: Vec<(usize, usize)> = split
        .train
        .iter()
        .flat_map(|&n| (0..ds.n_steps() - 1).map(move |k| (n, k)))
        .collect();
    let mut opt = AdamW::new(cfg.lr);
    let trace = run_stage("hdp", 0, bcfg.epochs, cfg, |epoch, lr| {
        opt.lr = lr;
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in shuffled(&items, seed, epoch).chunks(cfg.batch_size) {
            let next: Vec<_> = chunk.iter().map(|&(n, k)| (n, k + 1)).collect();
            let (out, cache) = net.forward(&gather(ds, chunk))?;
            let (l, g) = mse_loss(&out, &gather(ds, &next))?;
            let grads = net.backward_params(&cache, &g)?;
            opt.step(&mut net, &grads)?;
            sum += l * chunk.len() as f64;
            count += chunk.len();
        }
        Ok((sum / count.max(1) as f64, None, None))
    })?;
    Ok(HdpModel {
        net,
        info: BaselineInfo {
            family: ds.family.clone(),
            ambient_dim: dim,
            n_steps: ds.n_steps(),
            delta_t: ds.time.dt(),
            config: cfg.clone(),
            baseline: bcfg.clone(),
            split,
            traces: vec![trace],
        },
    })
}

impl HdpModel {
    /// States at `0..=k_max`: `x0` followed by iterates of the network.
    pub fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>> {
        if x0.cols() != self.info.ambient_dim {
            return Err(WeldError::shape("HDP input", self.info.ambient_dim, x0.cols()));
        }
        let mut out = Vec::with_capacity(k_max + 1);
        out.push(x0.clone());
        for _ in 0..k_max {
            let next = self.net.predict(out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }

    /// `k`-fold composition of the network applied to `x0`.
    pub fn rollout(&self, x0: &Matrix, k: usize) -> Result<Matrix> {
        Ok(self.predict_trajectory(x0, k)?.pop().unwrap())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_baseline(dir, HDP_KIND, "x", &self.net, &self.info)
    }

    pub fn load(dir: &Path) -> Result<HdpModel> {
        let (net, info) = load_baseline(dir, HDP_KIND)?;
        Ok(HdpModel { net, info })
    }
}
