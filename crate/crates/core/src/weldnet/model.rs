use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::window::WindowLayout;
use crate::error::{Result, WeldError};
use crate::neural::checkpoint::{load_mlp, load_residual, save_mlp, save_residual, NetMeta};
use crate::neural::{Matrix, ResidualNet};
use crate::pde::Split;
use crate::reduction::{Coder, CoderKind, PcaModel};

pub const MANIFEST_FILE: &str = "manifest.json";
const MODEL_FORMAT: &str = "weldnet-model/1";

/// A latent code with its time carried as a grid index, so that
/// `t = step * delta_t` is exact however many steps were taken.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub z: Vec<f64>,
    pub step: usize,
    pub delta_t: f64,
}

impl LatentCode {
    pub fn t(&self) -> f64 {
        self.step as f64 * self.delta_t
    }
}

/// `[z | t]` rows for a batch of codes sharing one time.
pub fn with_time(z: &Matrix, t: f64) -> Matrix {
    z.with_column(&vec![t; z.rows()])
}

/// Encoder, decoder and propagator of one window.
#[derive(Clone, Debug)]
pub struct WindowModel {
    pub index: usize,
    pub k_start: usize,
    pub k_end: usize,
    pub delta_t: f64,
    pub coder: Coder,
    /// Residual net over `R^{d+1}`; its time output is replaced by `t + dt`.
    pub propagator: ResidualNet,
}

impl WindowModel {
    pub fn latent_dim(&self) -> usize {
        self.coder.latent_dim()
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k < self.k_start || k > self.k_end {
            return Err(WeldError::invalid(format!(
                "time index {k} outside window {} = [{}, {}]",
                self.index, self.k_start, self.k_end
            )));
        }
        Ok(())
    }

    pub fn encode_with_time(&self, x: &[f64], k: usize) -> Result<LatentCode> {
        self.check_step(k)?;
        let z = self.coder.encode(&Matrix::row_vector(x))?.into_data();
        Ok(LatentCode {
            z,
            step: k,
            delta_t: self.delta_t,
        })
    }

    pub fn propagate(&self, code: &LatentCode) -> Result<LatentCode> {
        if code.step >= self.k_end || code.step < self.k_start {
            return Err(WeldError::invalid(format!(
                "cannot step from index {} inside window {} = [{}, {}]",
                code.step, self.index, self.k_start, self.k_end
            )));
        }
        let z = self.propagate_batch(&Matrix::row_vector(&code.z), code.step)?.into_data();
        Ok(LatentCode {
            z,
            step: code.step + 1,
            delta_t: self.delta_t,
        })
    }

    /// One propagator step for codes at time index `k` (no range check).
    pub fn propagate_batch(&self, z: &Matrix, k: usize) -> Result<Matrix> {
        let out = self.propagator.predict(&with_time(z, k as f64 * self.delta_t))?;
        Ok(out.take_cols(z.cols()))
    }

    pub fn decode(&self, code: &LatentCode) -> Result<Vec<f64>> {
        Ok(self.coder.decode(&Matrix::row_vector(&code.z))?.into_data())
    }
}

/// One epoch of a training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop: Option<f64>,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    pub window: usize,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Clone, Debug)]
pub struct WeldModel {
    pub layout: WindowLayout,
    pub windows: Vec<WindowModel>,
    /// `transcoders[i]` maps window `i` codes to window `i + 1` codes at
    /// the shared boundary; time passes through unchanged.
    pub transcoders: Vec<ResidualNet>,
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub delta_t: f64,
    pub config: TrainConfig,
    pub split: Split,
    pub traces: Vec<StageTrace>,
    pub family: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    kind: String,
    coder: CoderKind,
    family: String,
    layout: WindowLayout,
    latent_dim: usize,
    ambient_dim: usize,
    delta_t: f64,
    config: TrainConfig,
    split: Split,
    traces: Vec<StageTrace>,
}

impl WeldModel {
    pub fn n_steps(&self) -> usize {
        self.layout.last_index() + 1
    }

    pub fn coder_kind(&self) -> CoderKind {
        self.windows[0].coder.kind()
    }

    /// Applies transcoder `i` to codes at its boundary.
    pub fn transcode(&self, i: usize, z: &Matrix) -> Result<Matrix> {
        let t = self.layout.end(i) as f64 * self.delta_t;
        Ok(self.transcoders[i].predict(&with_time(z, t))?.take_cols(z.cols()))
    }

    /// Predicted states at every time index `0..=k_max` for a batch of
    /// initial states: encode with window 1, then roll each window's
    /// propagator and transcode at the boundaries. A boundary index is
    /// decoded by the earlier window.
    pub fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>> {
        if k_max > self.layout.last_index() {
            return Err(WeldError::invalid(format!(
                "time index {k_max} beyond last index {}",
                self.layout.last_index()
            )));
        }
        if x0.cols() != self.ambient_dim {
            return Err(WeldError::shape("WeldModel input", self.ambient_dim, x0.cols()));
        }
        let mut out = Vec::with_capacity(k_max + 1);
        let mut z = self.windows[0].coder.encode(x0)?;
        out.push(self.windows[0].coder.decode(&z)?);
        let mut k = 0;
        for (i, w) in self.windows.iter().enumerate() {
            while k < w.k_end && k < k_max {
                z = w.propagate_batch(&z, k)?;
                k += 1;
                out.push(w.coder.decode(&z)?);
            }
            if k == k_max {
                break;
            }
            z = self.transcode(i, &z)?;
        }
        Ok(out)
    }

    /// Prediction at a single time index.
    pub fn predict(&self, x0: &Matrix, k: usize) -> Result<Matrix> {
        Ok(self.predict_trajectory(x0, k)?.pop().unwrap())
    }

    /// Autoencoder reconstruction using the window that owns index `k`.
    pub fn project(&self, x: &Matrix, k: usize) -> Result<Matrix> {
        self.windows[self.layout.owner(k)?].coder.reconstruct(x)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let seed = self.config.seed;
        for w in &self.windows {
            let meta = |role| NetMeta {
                role,
                window: Some(w.index),
                seed,
                stage: "final",
            };
            match &w.coder {
                Coder::Neural { encoder, decoder } => {
                    save_mlp(&dir.join(format!("w{}_encoder.ckpt", w.index)), encoder, "mlp", &meta("encoder"))?;
                    save_mlp(&dir.join(format!("w{}_decoder.ckpt", w.index)), decoder, "mlp", &meta("decoder"))?;
                }
                Coder::Pca(p) => p.save(&dir.join(format!("w{}_pca.ckpt", w.index)), &meta("coder"))?,
            }
            save_residual(
                &dir.join(format!("w{}_propagator.ckpt", w.index)),
                &w.propagator,
                &meta("propagator"),
            )?;
        }
        for (i, t) in self.transcoders.iter().enumerate() {
            let meta = NetMeta {
                role: "transcoder",
                window: Some(i),
                seed,
                stage: "final",
            };
            save_residual(&dir.join(format!("t{i}_transcoder.ckpt")), t, &meta)?;
        }
        let manifest = Manifest {
            format: MODEL_FORMAT.into(),
            kind: "weldnet".into(),
            coder: self.coder_kind(),
            family: self.family.clone(),
            layout: self.layout.clone(),
            latent_dim: self.latent_dim,
            ambient_dim: self.ambient_dim,
            delta_t: self.delta_t,
            config: self.config.clone(),
            split: self.split.clone(),
            traces: self.traces.clone(),
        };
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<WeldModel> {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        if m.format != MODEL_FORMAT || m.kind != "weldnet" {
            return Err(WeldError::invalid(format!("{} is not a WeldNet model directory", dir.display())));
        }
        m.layout.validate()?;
        let mut windows = Vec::with_capacity(m.layout.n_windows());
        for i in 0..m.layout.n_windows() {
            let coder = match m.coder {
                CoderKind::Neural => Coder::Neural {
                    encoder: load_mlp(&dir.join(format!("w{i}_encoder.ckpt")))?.1,
                    decoder: load_mlp(&dir.join(format!("w{i}_decoder.ckpt")))?.1,
                },
                CoderKind::Pca => Coder::Pca(PcaModel::load(&dir.join(format!("w{i}_pca.ckpt")))?),
            };
            windows.push(WindowModel {
                index: i,
                k_start: m.layout.start(i),
                k_end: m.layout.end(i),
                delta_t: m.delta_t,
                coder,
                propagator: load_residual(&dir.join(format!("w{i}_propagator.ckpt")))?,
            });
        }
        let transcoders = (0..m.layout.n_windows() - 1)
            .map(|i| load_residual(&dir.join(format!("t{i}_transcoder.ckpt"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeldModel {
            layout: m.layout,
            windows,
            transcoders,
            latent_dim: m.latent_dim,
            ambient_dim: m.ambient_dim,
            delta_t: m.delta_t,
            config: m.config,
            split: m.split,
            traces: m.traces,
            family: m.family,
        })
    }
}

/// Reads only the `kind` field of a model directory's manifest.
pub fn model_kind(dir: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    let k: Kind = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    Ok(k.kind)
}
