//! Network checkpoint container.
//!
//! Layout: the 8 magic bytes `WELDNET1`, a little-endian `u64` header length,
//! the UTF-8 JSON header, then every parameter as a little-endian `f64` in
//! declaration order (`W_0` row-major, `b_0`, `W_1`, ...).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{MlpNet, MlpSpec, Params};
use super::residual::ResidualNet;
use crate::error::{Result, WeldError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"WELDNET1";
const MAGIC_FAMILY: &[u8; 7] = b"WELDNET";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// `mlp`, `residual`, `pca`, `hdp` or `time-input`.
    pub kind: String,
    /// What the network does inside its model, e.g. `encoder`.
    pub role: String,
    #[serde(default)]
    pub window: Option<usize>,
    pub seed: u64,
    pub stage: String,
    #[serde(default)]
    pub spec: Option<MlpSpec>,
    /// Free-form extra fields (PCA dimensions, time-feature layout).
    #[serde(default)]
    pub extra: serde_json::Value,
    pub n_values: usize,
}

pub fn write_checkpoint(path: &Path, header: &CheckpointHeader, values: &[f64]) -> Result<()> {
    if header.n_values != values.len() {
        return Err(WeldError::shape("write_checkpoint", header.n_values, values.len()));
    }
    let json = serde_json::to_vec(header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact_or(&mut r, &mut magic, path, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        if &magic[..7] == MAGIC_FAMILY {
            return Err(WeldError::VersionMismatch {
                path: path.to_path_buf(),
                found: String::from_utf8_lossy(&magic).into_owned(),
                supported: "WELDNET1",
            });
        }
        return Err(WeldError::BadMagic {
            path: path.to_path_buf(),
            expected: "WELDNET1",
        });
    }
    let mut len = [0u8; 8];
    read_exact_or(&mut r, &mut len, path, "header length")?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    read_exact_or(&mut r, &mut json, path, "header")?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    let mut bytes = vec![0u8; header.n_values * 8];
    read_exact_or(&mut r, &mut bytes, path, "parameters")?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub(crate) fn read_exact_or(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => WeldError::Truncated {
            path: path.to_path_buf(),
            detail: format!("ended inside {what}"),
        },
        _ => WeldError::Io(e),
    })
}

pub fn flatten(p: &impl Params) -> Vec<f64> {
    p.tensors().concat()
}

/// Rebuilds an MLP from its spec and flattened parameters.
pub fn mlp_from_values(spec: &MlpSpec, values: &[f64]) -> Result<MlpNet> {
    if values.len() != spec.n_params() {
        return Err(WeldError::shape("mlp_from_values", spec.n_params(), values.len()));
    }
    let mut off = 0;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for (i, o) in spec.layer_dims() {
        weights.push(Matrix::new(i, o, values[off..off + i * o].to_vec())?);
        off += i * o;
        biases.push(values[off..off + o].to_vec());
        off += o;
    }
    MlpNet::from_parts(spec.clone(), weights, biases)
}

/// Metadata shared by every network written from a trained model.
#[derive(Clone, Debug)]
pub struct NetMeta<'a> {
    pub role: &'a str,
    pub window: Option<usize>,
    pub seed: u64,
    pub stage: &'a str,
}

pub fn save_mlp(path: &Path, net: &MlpNet, kind: &str, meta: &NetMeta<'_>) -> Result<()> {
    let values = flatten(net);
    let header = CheckpointHeader {
        kind: kind.to_string(),
        role: meta.role.to_string(),
        window: meta.window,
        seed: meta.seed,
        stage: meta.stage.to_string(),
        spec: Some(net.spec().clone()),
        extra: serde_json::Value::Null,
        n_values: values.len(),
    };
    write_checkpoint(path, &header, &values)
}

pub fn load_mlp(path: &Path) -> Result<(CheckpointHeader, MlpNet)> {
    let (header, values) = read_checkpoint(path)?;
    let spec = header
        .spec
        .clone()
        .ok_or_else(|| WeldError::invalid(format!("{} holds no network spec", path.display())))?;
    let net = mlp_from_values(&spec, &values)?;
    Ok((header, net))
}

pub fn save_residual(path: &Path, net: &ResidualNet, meta: &NetMeta<'_>) -> Result<()> {
    save_mlp(path, net.inner(), "residual", meta)
}

pub fn load_residual(path: &Path) -> Result<ResidualNet> {
    let (header, net) = load_mlp(path)?;
    if header.kind != "residual" {
        return Err(WeldError::invalid(format!(
            "{} holds a {:?} network, expected residual",
            path.display(),
            header.kind
        )));
    }
    ResidualNet::new(net)
}
