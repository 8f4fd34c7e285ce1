//! Relative-error metrics over held-out trajectories and their CSV reports.
//!
//! Every curve is a mean over test samples of per-sample relative L2
//! errors, not the relative error of a mean.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{HdpModel, TimeInputModel};
use crate::error::{Result, WeldError};
use crate::neural::Matrix;
use crate::pde::TrajectoryDataset;
use crate::weldnet::train::gather;
use crate::weldnet::WeldModel;

/// `|pred - truth|_2 / |truth|_2`.
pub fn relative_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(WeldError::shape("relative_error", truth.len(), pred.len()));
    }
    let nt = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nt == 0.0 {
        return Err(WeldError::invalid("relative error against a zero-norm truth"));
    }
    let diff = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>().sqrt();
    Ok(diff / nt)
}

/// Per-row relative errors of two equally shaped batches.
pub fn row_errors(pred: &Matrix, truth: &Matrix) -> Result<Vec<f64>> {
    if pred.shape() != truth.shape() {
        return Err(WeldError::shape(
            "row_errors",
            format!("{:?}", truth.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    (0..truth.rows()).map(|r| relative_error(pred.row(r), truth.row(r))).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Anything that maps initial states to predicted states on the time grid.
pub trait Predictor {
    fn ambient_dim(&self) -> usize;
    fn n_steps(&self) -> usize;
    /// Predictions at every index `0..=k_max`, one row per initial state.
    fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>>;
}

impl Predictor for WeldModel {
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
    fn n_steps(&self) -> usize {
        WeldModel::n_steps(self)
    }
    fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>> {
        WeldModel::predict_trajectory(self, x0, k_max)
    }
}

impl Predictor for HdpModel {
    fn ambient_dim(&self) -> usize {
        self.info.ambient_dim
    }
    fn n_steps(&self) -> usize {
        self.info.n_steps
    }
    fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>> {
        HdpModel::predict_trajectory(self, x0, k_max)
    }
}

impl Predictor for TimeInputModel {
    fn ambient_dim(&self) -> usize {
        self.info.ambient_dim
    }
    fn n_steps(&self) -> usize {
        self.info.n_steps
    }
    fn predict_trajectory(&self, x0: &Matrix, k_max: usize) -> Result<Vec<Matrix>> {
        (0..=k_max).map(|k| self.predict(x0, k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Projection,
    Operator,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Projection => "projection",
            ErrorKind::Operator => "operator",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: ErrorKind,
    pub model_tag: String,
    /// Mean relative error at each time index.
    pub per_time: Vec<f64>,
    /// `(parameter, relative error at the final index)` per test sample,
    /// sorted by parameter.
    pub per_sample_final: Vec<(f64, f64)>,
}

impl ErrorReport {
    pub fn final_error(&self) -> f64 {
        self.per_time.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_dims(ds: &TrajectoryDataset, dim: usize, steps: usize) -> Result<()> {
    if ds.dim() != dim {
        return Err(WeldError::shape("model vs dataset spatial dimension", dim, ds.dim()));
    }
    if ds.n_steps() != steps {
        return Err(WeldError::shape("model vs dataset time steps", steps, ds.n_steps()));
    }
    Ok(())
}

fn sorted_by_param(ds: &TrajectoryDataset, samples: &[usize], errs: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = samples.iter().zip(errs).map(|(&n, &e)| (ds.params[n], e)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn snapshots(ds: &TrajectoryDataset, samples: &[usize], k: usize) -> Matrix {
    gather(ds, &samples.iter().map(|&n| (n, k)).collect::<Vec<_>>())
}

/// Reconstruction error of the window coders; index `k` uses the window
/// that owns it, so boundaries go to the earlier window.
pub fn projection_error_vs_time(model: &WeldModel, ds: &TrajectoryDataset, samples: &[usize], tag: &str) -> Result<ErrorReport> {
    check_dims(ds, model.ambient_dim, model.n_steps())?;
    let mut per_time = Vec::with_capacity(ds.n_steps());
    let mut last = Vec::new();
    for k in 0..ds.n_steps() {
        let x = snapshots(ds, samples, k);
        last = row_errors(&model.project(&x, k)?, &x)?;
        per_time.push(mean(&last));
    }
    Ok(ErrorReport {
        kind: ErrorKind::Projection,
        model_tag: tag.to_string(),
        per_time,
        per_sample_final: sorted_by_param(ds, samples, &last),
    })
}

/// Prediction error from the initial states of `samples`.
pub fn operator_error_vs_time(model: &dyn Predictor, ds: &TrajectoryDataset, samples: &[usize], tag: &str) -> Result<ErrorReport> {
    check_dims(ds, model.ambient_dim(), model.n_steps())?;
    if samples.is_empty() {
        return Err(WeldError::invalid("no samples to evaluate"));
    }
    let preds = model.predict_trajectory(&snapshots(ds, samples, 0), ds.n_steps() - 1)?;
    let mut per_time = Vec::with_capacity(ds.n_steps());
    let mut last = Vec::new();
    for (k, p) in preds.iter().enumerate() {
        last = row_errors(p, &snapshots(ds, samples, k))?;
        per_time.push(mean(&last));
    }
    Ok(ErrorReport {
        kind: ErrorKind::Operator,
        model_tag: tag.to_string(),
        per_time,
        per_sample_final: sorted_by_param(ds, samples, &last),
    })
}

/// Final-time operator error per sample, sorted by parameter.
pub fn error_vs_parameter(model: &dyn Predictor, ds: &TrajectoryDataset, samples: &[usize]) -> Result<Vec<(f64, f64)>> {
    Ok(operator_error_vs_time(model, ds, samples, "")?.per_sample_final)
}

/// Writes `{tag}_{kind}_time.csv` (`k,error`, one row per index) for each
/// report and, when it has per-sample values, `{tag}_{kind}_param.csv`
/// (`parameter,error`). Floats use shortest round-trip formatting.
pub fn emit_report_csv(reports: &[ErrorReport], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if reports.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir)?;
    for r in reports {
        let mut s = String::from("k,error\n");
        for (k, e) in r.per_time.iter().enumerate() {
            s.push_str(&format!("{k},{e}\n"));
        }
        let p = dir.join(format!("{}_{}_time.csv", r.model_tag, r.kind));
        fs::write(&p, s)?;
        written.push(p);
        if !r.per_sample_final.is_empty() {
            let mut s = String::from("parameter,error\n");
            for (a, e) in &r.per_sample_final {
                s.push_str(&format!("{a},{e}\n"));
            }
            let p = dir.join(format!("{}_{}_param.csv", r.model_tag, r.kind));
            fs::write(&p, s)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// One row per report with the errors at the requested indices, e.g.
/// `30,60,...,300`.
pub fn error_table(reports: &[ErrorReport], times: &[usize]) -> Result<String> {
    let mut s = String::from("model,kind");
    for k in times {
        s.push_str(&format!(",{k}"));
    }
    s.push('\n');
    for r in reports {
        s.push_str(&format!("{},{}", r.model_tag, r.kind));
        for &k in times {
            let e = r
                .per_time
                .get(k)
                .ok_or_else(|| WeldError::invalid(format!("time index {k} beyond report length {}", r.per_time.len())))?;
            s.push_str(&format!(",{e}"));
        }
        s.push('\n');
    }
    Ok(s)
}
