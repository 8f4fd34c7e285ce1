//! Single-network baselines: the high-dimensional propagator (a one-step
//! map on full states, iterated) and the time-input network (initial state
//! and elapsed time in, state out).

mod hdp;
mod time_input;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use hdp::{train_hdp, HdpModel};
pub use time_input::{train_time_input, TimeInputModel};

use crate::error::{Result, WeldError};
use crate::neural::checkpoint::{load_mlp, save_mlp, NetMeta};
use crate::neural::MlpNet;
use crate::pde::Split;
use crate::weldnet::model::MANIFEST_FILE;
use crate::weldnet::{StageTrace, TrainConfig};

const BASELINE_FORMAT: &str = "weldnet-baseline/1";
const NET_FILE: &str = "net.ckpt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub width: usize,
    pub depth: usize,
    pub epochs: usize,
    /// Multiplier applied to the time feature of the time-input network.
    /// 1 feeds raw `t`.
    pub time_scale: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            width: 1000,
            depth: 3,
            epochs: 300,
            time_scale: 1.0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.depth == 0 {
            return Err(WeldError::invalid("baseline width and depth must be positive"));
        }
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(WeldError::invalid("time_scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    kind: String,
    family: String,
    ambient_dim: usize,
    n_steps: usize,
    delta_t: f64,
    /// Input layout of the network, e.g. `"x"` or `"x0|t"`.
    input_layout: String,
    config: TrainConfig,
    baseline: BaselineConfig,
    split: Split,
    traces: Vec<StageTrace>,
}

/// Fields shared by both baselines.
#[derive(Clone, Debug)]
pub struct BaselineInfo {
    pub family: String,
    pub ambient_dim: usize,
    pub n_steps: usize,
    pub delta_t: f64,
    pub config: TrainConfig,
    pub baseline: BaselineConfig,
    pub split: Split,
    pub traces: Vec<StageTrace>,
}

fn save_baseline(dir: &Path, kind: &str, layout: &str, net: &MlpNet, info: &BaselineInfo) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = NetMeta {
        role: kind,
        window: None,
        seed: info.config.seed,
        stage: "final",
    };
    save_mlp(&dir.join(NET_FILE), net, kind, &meta)?;
    let m = Manifest {
        format: BASELINE_FORMAT.into(),
        kind: kind.into(),
        family: info.family.clone(),
        ambient_dim: info.ambient_dim,
        n_steps: info.n_steps,
        delta_t: info.delta_t,
        input_layout: layout.into(),
        config: info.config.clone(),
        baseline: info.baseline.clone(),
        split: info.split.clone(),
        traces: info.traces.clone(),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

fn load_baseline(dir: &Path, kind: &str) -> Result<(MlpNet, BaselineInfo)> {
    let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    if m.format != BASELINE_FORMAT || m.kind != kind {
        return Err(WeldError::invalid(format!("{} is not a {kind} model directory", dir.display())));
    }
    let (header, net) = load_mlp(&dir.join(NET_FILE))?;
    if header.kind != kind {
        return Err(WeldError::invalid(format!("checkpoint kind {:?}, expected {kind:?}", header.kind)));
    }
    let info = BaselineInfo {
        family: m.family,
        ambient_dim: m.ambient_dim,
        n_steps: m.n_steps,
        delta_t: m.delta_t,
        config: m.config,
        baseline: m.baseline,
        split: m.split,
        traces: m.traces,
    };
    Ok((net, info))
}
