use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeldError};
use crate::neural::PlateauSchedule;

/// How the autoencoder and propagator of a window are trained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Joint training, then accumulation-loss finetuning.
    #[default]
    #[serde(rename = "i")]
    JointAccumulate,
    /// Joint training, then one-step (displacement) finetuning.
    #[serde(rename = "ii")]
    JointDisplace,
    /// Autoencoder alone, then an accumulation-loss propagator.
    #[serde(rename = "iii")]
    SeparateAccumulate,
    /// Autoencoder alone, then a one-step propagator.
    #[serde(rename = "iv")]
    SeparateDisplace,
}

impl Variant {
    pub fn joint(self) -> bool {
        matches!(self, Variant::JointAccumulate | Variant::JointDisplace)
    }

    pub fn accumulate(self) -> bool {
        matches!(self, Variant::JointAccumulate | Variant::SeparateAccumulate)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Variant::JointAccumulate => "i",
            Variant::JointDisplace => "ii",
            Variant::SeparateAccumulate => "iii",
            Variant::SeparateDisplace => "iv",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = WeldError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" => Ok(Variant::JointAccumulate),
            "ii" => Ok(Variant::JointDisplace),
            "iii" => Ok(Variant::SeparateAccumulate),
            "iv" => Ok(Variant::SeparateDisplace),
            _ => Err(WeldError::invalid(format!(
                "unknown ablation variant {s:?}; expected i, ii, iii or iv"
            ))),
        }
    }
}

/// Hidden-layer widths and depths of the window networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub coder_width: usize,
    pub coder_depth: usize,
    pub propagator_width: usize,
    pub propagator_depth: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            coder_width: 500,
            coder_depth: 3,
            propagator_width: 200,
            propagator_depth: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs_joint: usize,
    pub epochs_finetune: usize,
    pub epochs_transcoder: usize,
    pub schedule: PlateauSchedule,
    pub variant: Variant,
    pub seed: u64,
    pub arch: Architecture,
    /// Fraction of trajectories used for training; the rest are held out.
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.1,
            batch_size: 32,
            lr: 1e-4,
            epochs_joint: 300,
            epochs_finetune: 150,
            epochs_transcoder: 300,
            schedule: PlateauSchedule::default(),
            variant: Variant::default(),
            seed: 0,
            arch: Architecture::default(),
            train_fraction: 0.8,
            split_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(WeldError::invalid("batch_size must be positive"));
        }
        if !(self.lr > 0.0) {
            return Err(WeldError::invalid("learning rate must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(WeldError::invalid("lambda must be nonnegative"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(WeldError::invalid("train_fraction must lie in (0, 1]"));
        }
        let a = &self.arch;
        if a.coder_width == 0 || a.coder_depth == 0 || a.propagator_width == 0 || a.propagator_depth == 0 {
            return Err(WeldError::invalid("network widths and depths must be positive"));
        }
        Ok(())
    }
}
