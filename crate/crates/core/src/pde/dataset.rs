//! Trajectory datasets: generation for the six families and the `WTRJ`
//! binary container.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grf::{sample_grf, GrfSample, GrfSpec};
use super::grid::{SpatialGrid, TimeGrid};
use super::initial::{Equation, Family, BURGERS_VISCOSITY};
use super::spectral::{solve, Pde, SolverOptions};
use super::transport::transport_solution;
use crate::error::{Result, WeldError};
use crate::neural::checkpoint::read_exact_or;
use crate::neural::Matrix;
use crate::rng::{self, stream};

pub const DATASET_MAGIC: &[u8; 8] = b"WTRJ0001";
const MAGIC_FAMILY: &[u8; 4] = b"WTRJ";

/// Generation settings. `t_end` of `None` means the family default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub family: Family,
    pub n_samples: usize,
    pub n_steps: usize,
    pub n_points: usize,
    pub t_end: Option<f64>,
    pub seed: u64,
    /// Solver steps per output step (spectral families only).
    pub substeps: usize,
    /// Spectral families are solved on `refine * n_points` modes and
    /// subsampled back onto the output grid.
    pub refine: usize,
}

impl GenConfig {
    pub fn new(family: Family) -> Self {
        GenConfig {
            family,
            n_samples: 500,
            n_steps: 301,
            n_points: 512,
            t_end: None,
            seed: 0,
            substeps: super::spectral::MIN_SUBSTEPS,
            refine: 1,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_end.unwrap_or_else(|| self.family.default_t_end()), self.n_steps)
    }

    pub fn space_grid(&self) -> Result<SpatialGrid> {
        let (a, b, periodic) = self.family.domain();
        SpatialGrid::new(self.n_points, a, b, periodic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DatasetHeader {
    family: String,
    n_samples: usize,
    n_steps: usize,
    n_points: usize,
    time: TimeGrid,
    space: SpatialGrid,
    seed: u64,
    params: Vec<f64>,
    #[serde(default)]
    generator: Option<GenConfig>,
}

/// `N x T x D` snapshots stored as `f32` in `[n][t][d]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDataset {
    pub family: String,
    pub time: TimeGrid,
    pub space: SpatialGrid,
    pub params: Vec<f64>,
    pub seed: u64,
    pub generator: Option<GenConfig>,
    n_samples: usize,
    values: Vec<f32>,
}

impl TrajectoryDataset {
    pub fn new(family: impl Into<String>, time: TimeGrid, space: SpatialGrid, params: Vec<f64>, values: Vec<f32>) -> Result<Self> {
        let n = params.len();
        let expect = n * time.n_steps * space.n_points;
        if values.len() != expect {
            return Err(WeldError::shape("trajectory dataset values", expect, values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(WeldError::numerical("dataset", format!("non-finite value at flat index {i}")));
        }
        Ok(TrajectoryDataset {
            family: family.into(),
            time,
            space,
            params,
            seed: 0,
            generator: None,
            n_samples: n,
            values,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_steps(&self) -> usize {
        self.time.n_steps
    }

    pub fn dim(&self) -> usize {
        self.space.n_points
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn snapshot(&self, n: usize, k: usize) -> &[f32] {
        let d = self.dim();
        let start = (n * self.n_steps() + k) * d;
        &self.values[start..start + d]
    }

    pub fn trajectory(&self, n: usize) -> &[f32] {
        let len = self.n_steps() * self.dim();
        &self.values[n * len..(n + 1) * len]
    }

    /// Snapshots `(n, k)` for the given samples at time index `k`, as rows.
    pub fn slice_at(&self, samples: &[usize], k: usize) -> Matrix {
        let d = self.dim();
        let mut data = Vec::with_capacity(samples.len() * d);
        for &n in samples {
            data.extend(self.snapshot(n, k).iter().map(|&v| v as f64));
        }
        Matrix::new(samples.len(), d, data).expect("consistent slice shape")
    }

    /// Keeps the listed trajectories, in the given order.
    pub fn subset(&self, samples: &[usize]) -> Result<TrajectoryDataset> {
        let mut values = Vec::with_capacity(samples.len() * self.n_steps() * self.dim());
        let mut params = Vec::with_capacity(samples.len());
        for &n in samples {
            if n >= self.n_samples {
                return Err(WeldError::invalid(format!("sample {n} out of range (N = {})", self.n_samples)));
            }
            values.extend_from_slice(self.trajectory(n));
            params.push(self.params[n]);
        }
        Ok(TrajectoryDataset {
            params,
            n_samples: samples.len(),
            values,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> TrajectoryDataset {
        TrajectoryDataset {
            family: self.family.clone(),
            time: self.time.clone(),
            space: self.space.clone(),
            params: Vec::new(),
            seed: self.seed,
            generator: self.generator.clone(),
            n_samples: 0,
            values: Vec::new(),
        }
    }

    /// Train/test split by trajectory. The permutation depends only on
    /// `(seed, N)`.
    pub fn split(&self, seed: u64, train_fraction: f64) -> Split {
        split_indices(self.n_samples, seed, train_fraction)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let header = DatasetHeader {
            family: self.family.clone(),
            n_samples: self.n_samples,
            n_steps: self.n_steps(),
            n_points: self.dim(),
            time: self.time.clone(),
            space: self.space.clone(),
            seed: self.seed,
            params: self.params.clone(),
            generator: self.generator.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<TrajectoryDataset> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        read_exact_or(&mut r, &mut magic, path, "magic")?;
        if &magic != DATASET_MAGIC {
            if &magic[..4] == MAGIC_FAMILY {
                return Err(WeldError::VersionMismatch {
                    path: path.to_path_buf(),
                    found: String::from_utf8_lossy(&magic).into_owned(),
                    supported: "WTRJ0001",
                });
            }
            return Err(WeldError::BadMagic {
                path: path.to_path_buf(),
                expected: "WTRJ0001",
            });
        }
        let mut len = [0u8; 8];
        read_exact_or(&mut r, &mut len, path, "header length")?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        read_exact_or(&mut r, &mut json, path, "header")?;
        let h: DatasetHeader = serde_json::from_slice(&json)?;
        if h.params.len() != h.n_samples || h.time.n_steps != h.n_steps || h.space.n_points != h.n_points {
            return Err(WeldError::invalid(format!("inconsistent dataset header in {}", path.display())));
        }
        let count = h.n_samples * h.n_steps * h.n_points;
        let mut bytes = vec![0u8; count * 4];
        read_exact_or(&mut r, &mut bytes, path, "values")?;
        let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let mut ds = TrajectoryDataset::new(h.family, h.time, h.space, h.params, values)?;
        ds.seed = h.seed;
        ds.generator = h.generator;
        Ok(ds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(n: usize, seed: u64, train_fraction: f64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng_for(seed, stream::SPLIT));
    let n_train = ((n as f64 * train_fraction).round() as usize).min(n);
    let test = idx.split_off(n_train);
    Split { train: idx, test }
}

/// Draws the per-sample family parameters.
pub fn sample_params(family: Family, n: usize, seed: u64) -> Vec<f64> {
    let (lo, hi) = family.param_range();
    (0..n)
        .map(|i| rng::rng_for(seed, stream::SAMPLE + i as u64).gen_range(lo..=hi))
        .collect()
}

/// The two dataset-level Burgers base fields `w0, w1`.
pub fn base_fields(grid: &SpatialGrid, seed: u64) -> Result<[GrfSample; 2]> {
    let spec = GrfSpec::burgers(grid.clone());
    Ok([
        sample_grf(&spec, rng::derive_seed(seed, stream::BASE_FIELD))?,
        sample_grf(&spec, rng::derive_seed(seed, stream::BASE_FIELD + 1))?,
    ])
}

/// Initial condition of a Burgers family member on `grid`.
pub fn burgers_initial(family: Family, param: f64, w: &[GrfSample; 2], grid: &SpatialGrid) -> Result<Vec<f64>> {
    let (a, b, shift) = match family {
        Family::Bscale => (param, (1.0 - param * param).max(0.0).sqrt(), 0.0),
        Family::Bshift => (0.5, 0.75f64.sqrt(), param),
        _ => return Err(WeldError::invalid(format!("{family} is not a Burgers family"))),
    };
    let w0 = w[0].evaluate_shifted(grid, shift)?;
    let w1 = w[1].evaluate_shifted(grid, shift)?;
    Ok(w0.iter().zip(&w1).map(|(x, y)| a * x + b * y).collect())
}

fn spectral_trajectory(
    pde: Pde,
    u0: &[f64],
    time: &TimeGrid,
    solver_grid: &SpatialGrid,
    refine: usize,
    substeps: usize,
) -> Result<Vec<f32>> {
    let traj = solve(pde, u0, time, solver_grid, SolverOptions { substeps })?;
    let mut out = Vec::with_capacity(traj.len() * solver_grid.n_points / refine);
    for row in traj {
        out.extend(row.iter().step_by(refine).map(|&v| v as f32));
    }
    Ok(out)
}

/// Generates one dataset. Samples are independent and run in parallel; the
/// result does not depend on the thread count.
pub fn gen_dataset(cfg: &GenConfig) -> Result<TrajectoryDataset> {
    if cfg.n_samples == 0 {
        return Err(WeldError::invalid("n_samples must be at least 1"));
    }
    let time = cfg.time_grid()?;
    let space = cfg.space_grid()?;
    let refine = cfg.refine.max(1);
    let params = sample_params(cfg.family, cfg.n_samples, cfg.seed);

    let trajectories: Vec<Result<Vec<f32>>> = match cfg.family.equation() {
        Equation::Transport => params
            .par_iter()
            .map(|&p| {
                let g = cfg.family.analytic_initial(p).expect("transport families are analytic");
                let mut out = Vec::with_capacity(time.n_steps * space.n_points);
                for t in time.times() {
                    out.extend(transport_solution(&*g, t, &space).into_iter().map(|v| v as f32));
                }
                Ok(out)
            })
            .collect(),
        Equation::Burgers => {
            let fine = space.refined(refine)?;
            let w = base_fields(&fine, cfg.seed)?;
            let pde = Pde::Burgers { nu: BURGERS_VISCOSITY };
            params
                .par_iter()
                .map(|&p| {
                    let u0 = burgers_initial(cfg.family, p, &w, &fine)?;
                    spectral_trajectory(pde, &u0, &time, &fine, refine, cfg.substeps)
                })
                .collect()
        }
        Equation::Kdv => {
            let fine = space.refined(refine)?;
            params
                .par_iter()
                .map(|&p| {
                    let g = cfg.family.analytic_initial(p).expect("KdV families are analytic");
                    let u0: Vec<f64> = fine.points().into_iter().map(g).collect();
                    spectral_trajectory(Pde::Kdv, &u0, &time, &fine, refine, cfg.substeps)
                })
                .collect()
        }
    };

    let mut values = Vec::with_capacity(cfg.n_samples * time.n_steps * space.n_points);
    for (i, t) in trajectories.into_iter().enumerate() {
        let t = t.map_err(|e| match e {
            WeldError::BlowUp { step, detail } => WeldError::BlowUp {
                step,
                detail: format!("sample {i}: {detail}"),
            },
            other => other,
        })?;
        values.extend(t);
    }
    let mut ds = TrajectoryDataset::new(cfg.family.name(), time, space, params, values)?;
    ds.seed = cfg.seed;
    ds.generator = Some(cfg.clone());
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(family: Family) -> GenConfig {
        GenConfig {
            n_samples: 3,
            n_steps: 11,
            n_points: 64,
            seed: 5,
            ..GenConfig::new(family)
        }
    }

    #[test]
    fn shapes_and_params() {
        for f in Family::ALL {
            let ds = gen_dataset(&small(f)).unwrap();
            assert_eq!(ds.values().len(), 3 * 11 * 64);
            let (lo, hi) = f.param_range();
            assert!(ds.params.iter().all(|&p| p >= lo && p <= hi));
        }
    }

    #[test]
    fn deterministic() {
        let a = gen_dataset(&small(Family::Bshift)).unwrap();
        let b = gen_dataset(&small(Family::Bshift)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prefix_of_larger_dataset() {
        let a = gen_dataset(&small(Family::Tscale)).unwrap();
        let b = gen_dataset(&GenConfig {
            n_samples: 5,
            ..small(Family::Tscale)
        })
        .unwrap();
        assert_eq!(a.values(), &b.values()[..a.values().len()]);
    }

    #[test]
    fn split_partitions() {
        let s = split_indices(10, 3, 0.8);
        assert_eq!(s.train.len(), 8);
        let mut all: Vec<_> = s.train.iter().chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, split_indices(10, 3, 0.8));
    }

    #[test]
    fn bscale_unit_circle() {
        let g = SpatialGrid::new(32, 0.0, 1.0, true).unwrap();
        let w = base_fields(&g, 1).unwrap();
        let a = 0.6;
        let u = burgers_initial(Family::Bscale, a, &w, &g).unwrap();
        let w0 = w[0].evaluate(&g).unwrap();
        let w1 = w[1].evaluate(&g).unwrap();
        for j in 0..32 {
            assert!((u[j] - (0.6 * w0[j] + 0.8 * w1[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn subset_keeps_order() {
        let ds = gen_dataset(&small(Family::Kshift)).unwrap();
        let s = ds.subset(&[2, 0]).unwrap();
        assert_eq!(s.trajectory(0), ds.trajectory(2));
        assert_eq!(s.params, vec![ds.params[2], ds.params[0]]);
        assert!(ds.subset(&[3]).is_err());
    }
}
