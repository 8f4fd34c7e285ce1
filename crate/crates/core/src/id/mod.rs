//! Intrinsic-dimension estimators: Levina-Bickel maximum likelihood and
//! TwoNN, both on exact brute-force nearest neighbors.

mod knn;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use knn::knn_distances;

use crate::error::{Result, WeldError};
use crate::neural::Matrix;
use crate::pde::TrajectoryDataset;
use crate::rng::{rng_for, stream};

pub const DEFAULT_MLE_K: usize = 20;
pub const DEFAULT_SUBSAMPLE: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdMethod {
    Mle,
    Twonn,
}

impl fmt::Display for IdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdMethod::Mle => "mle",
            IdMethod::Twonn => "twonn",
        })
    }
}

impl FromStr for IdMethod {
    type Err = WeldError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(IdMethod::Mle),
            "twonn" => Ok(IdMethod::Twonn),
            _ => Err(WeldError::invalid(format!("unknown estimator {s:?}; expected mle or twonn"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub method: IdMethod,
    pub value: f64,
    /// Neighbor count of the MLE estimator.
    pub k_neighbors: Option<usize>,
    pub n_points_used: usize,
}

/// Levina-Bickel MLE with `k` neighbors.
///
/// Per point, `m_k(x) = [ (1/(k-1)) sum_{j<k} log(T_k / T_j) ]^-1` where
/// `T_j` is the distance to the j-th neighbor. The `1/(k-1)` normalization
/// is what the integral approximation of Haro et al. gives for the
/// likelihood of the neighbor radii when the noise level is zero: their
/// translated-Poisson integral reduces to the Levina-Bickel one, whose
/// bias-corrected normalization is `k - 1` rather than `k`. Point estimates
/// are pooled as the inverse of the mean inverse (MacKay and Ghahramani),
/// i.e. `(k-1) M / sum_x sum_j log(T_k/T_j)`.
pub fn mle_id(points: &Matrix, k: usize) -> Result<IdEstimate> {
    if k < 2 {
        return Err(WeldError::invalid("MLE needs at least 2 neighbors"));
    }
    if points.rows() <= k {
        return Err(WeldError::invalid(format!(
            "MLE with k = {k} needs more than {k} points, got {}",
            points.rows()
        )));
    }
    let dists = knn_distances(points, k)?;
    let mut inv_sum = 0.0;
    for row in &dists {
        let tk = row[k - 1];
        let s: f64 = row[..k - 1].iter().map(|&tj| (tk / tj).ln()).sum();
        inv_sum += s / (k - 1) as f64;
    }
    let value = points.rows() as f64 / inv_sum;
    finish(IdMethod::Mle, value, Some(k), points.rows())
}

/// TwoNN: with `mu_i = r_2 / r_1` sorted ascending and the empirical
/// distribution `F(mu_(i)) = i / M` (`i = 0..M`, so no point is dropped and
/// the log stays finite), `d` is the least-squares slope through the origin
/// of `-log(1 - F)` against `log mu`.
pub fn twonn_id(points: &Matrix) -> Result<IdEstimate> {
    let m = points.rows();
    if m < 3 {
        return Err(WeldError::invalid(format!("TwoNN needs at least 3 points, got {m}")));
    }
    let dists = knn_distances(points, 2)?;
    let mut mu: Vec<f64> = dists.iter().map(|r| r[1] / r[0]).collect();
    mu.sort_by(f64::total_cmp);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &v) in mu.iter().enumerate() {
        let x = v.ln();
        let y = -(1.0 - i as f64 / m as f64).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(WeldError::numerical("twonn", "all neighbor ratios equal 1"));
    }
    finish(IdMethod::Twonn, sxy / sxx, None, m)
}

fn finish(method: IdMethod, value: f64, k: Option<usize>, n: usize) -> Result<IdEstimate> {
    if !(value.is_finite() && value > 0.0) {
        return Err(WeldError::numerical(
            method.to_string(),
            format!("estimate {value} is not a positive number"),
        ));
    }
    Ok(IdEstimate {
        method,
        value,
        k_neighbors: k,
        n_points_used: n,
    })
}

pub fn estimate(method: IdMethod, points: &Matrix, k: usize) -> Result<IdEstimate> {
    match method {
        IdMethod::Mle => mle_id(points, k),
        IdMethod::Twonn => twonn_id(points),
    }
}

/// Which slice of a dataset an estimate describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdSlice {
    Time(usize),
    AllTimes,
}

impl fmt::Display for IdSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdSlice::Time(k) => write!(f, "t{k}"),
            IdSlice::AllTimes => f.write_str("all"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdRow {
    pub slice: IdSlice,
    pub estimate: IdEstimate,
}

/// Per-time estimates at `times`, plus, when `subsample > 0`, one estimate
/// over a seeded random subsample of all snapshots (clamped to the
/// population).
pub fn dataset_id_report(
    ds: &TrajectoryDataset,
    method: IdMethod,
    k: usize,
    times: &[usize],
    subsample: usize,
    seed: u64,
) -> Result<Vec<IdRow>> {
    let mut rows = Vec::with_capacity(times.len() + 1);
    for &t in times {
        if t >= ds.n_steps() {
            return Err(WeldError::invalid(format!("time index {t} out of range 0..{}", ds.n_steps())));
        }
        let all: Vec<usize> = (0..ds.n_samples()).collect();
        let est = estimate(method, &ds.slice_at(&all, t), k)?;
        rows.push(IdRow {
            slice: IdSlice::Time(t),
            estimate: est,
        });
    }
    if subsample > 0 {
        let total = ds.n_samples() * ds.n_steps();
        let count = subsample.min(total);
        let mut picks = index::sample(&mut rng_for(seed, stream::SUBSAMPLE), total, count).into_vec();
        picks.sort_unstable();
        let dim = ds.dim();
        let mut data = Vec::with_capacity(count * dim);
        for p in picks {
            data.extend(ds.snapshot(p / ds.n_steps(), p % ds.n_steps()).iter().map(|&v| v as f64));
        }
        let est = estimate(method, &Matrix::new(count, dim, data)?, k)?;
        rows.push(IdRow {
            slice: IdSlice::AllTimes,
            estimate: est,
        });
    }
    Ok(rows)
}

/// CSV with columns `method,slice,estimate,k,n`; `k` is empty for TwoNN.
pub fn write_id_csv(rows: &[IdRow], path: &Path) -> Result<()> {
    let mut out = String::from("method,slice,estimate,k,n\n");
    for r in rows {
        let e = &r.estimate;
        let k = e.k_neighbors.map(|k| k.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", e.method, r.slice, e.value, k, e.n_points_used));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
