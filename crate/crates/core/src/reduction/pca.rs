//! Principal component analysis of snapshot matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jacobi::symmetric_eigen;
use crate::error::{Result, WeldError};
use crate::neural::checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, NetMeta};
use crate::neural::Matrix;

pub const JACOBI_TOL: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x D`, orthonormal rows.
    pub components: Matrix,
    /// Sample-covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PcaExtra {
    latent_dim: usize,
    ambient_dim: usize,
}

/// Fits the top-`d` principal directions of the rows of `data`. Works on
/// the `D x D` covariance or the `M x M` Gram matrix, whichever is smaller.
/// Directions beyond the data rank get eigenvalue 0 and complete the
/// orthonormal frame.
pub fn pca_fit(data: &Matrix, d: usize) -> Result<PcaModel> {
    let (m, dim) = data.shape();
    if d == 0 {
        return Err(WeldError::invalid("PCA latent dimension must be at least 1"));
    }
    if d > m.min(dim) {
        return Err(WeldError::invalid(format!(
            "PCA latent dimension {d} exceeds min(M, D) = {}",
            m.min(dim)
        )));
    }
    let mean = data.column_means();
    let mut xc = data.clone();
    for r in 0..m {
        for (x, mu) in xc.row_mut(r).iter_mut().zip(&mean) {
            *x -= mu;
        }
    }
    let denom = (m.max(2) - 1) as f64;

    let mut eigenvalues = Vec::with_capacity(d);
    let mut comps: Vec<Vec<f64>> = Vec::with_capacity(d);
    if dim <= m {
        let mut cov = xc.t_matmul(&xc)?;
        cov.scale(1.0 / denom);
        let eig = symmetric_eigen(&cov, JACOBI_TOL)?;
        let top = eig.values[0].max(0.0);
        for i in 0..d {
            let lam = eig.values[i];
            eigenvalues.push(if lam <= RANK_TOL * top { 0.0 } else { lam });
            comps.push((0..dim).map(|k| eig.vectors.get(k, i)).collect());
        }
    } else {
        let mut gram = xc.matmul_t(&xc)?;
        gram.scale(1.0 / denom);
        let eig = symmetric_eigen(&gram, JACOBI_TOL)?;
        let top = eig.values[0].max(0.0);
        for i in 0..d {
            let lam = eig.values[i];
            if lam <= RANK_TOL * top || lam <= 0.0 {
                break;
            }
            // v = Xc^T u / sqrt(lambda (M - 1))
            let u: Vec<f64> = (0..m).map(|r| eig.vectors.get(r, i)).collect();
            let mut v = vec![0.0; dim];
            for r in 0..m {
                for (vk, x) in v.iter_mut().zip(xc.row(r)) {
                    *vk += u[r] * x;
                }
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            eigenvalues.push(lam);
            comps.push(v);
        }
        complete_frame(&mut comps, d, dim);
        eigenvalues.resize(d, 0.0);
    }

    for c in comps.iter_mut() {
        let (imax, _) = c
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        if c[imax] < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let components = Matrix::from_rows(&comps)?;
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
    })
}

/// Extends an orthonormal set to `d` vectors by Gram-Schmidt over the
/// standard basis.
fn complete_frame(comps: &mut Vec<Vec<f64>>, d: usize, dim: usize) {
    let mut e = 0;
    while comps.len() < d && e < dim {
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in comps.iter() {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, ci)| *x -= dot * ci);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            comps.push(v);
        }
    }
}

impl PcaModel {
    pub fn latent_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.cols()
    }

    /// Rows of `x` (B x D) to codes (B x d).
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.ambient_dim() {
            return Err(WeldError::shape("pca encode", self.ambient_dim(), x.cols()));
        }
        let mut xc = x.clone();
        for r in 0..xc.rows() {
            for (v, mu) in xc.row_mut(r).iter_mut().zip(&self.mean) {
                *v -= mu;
            }
        }
        xc.matmul_t(&self.components)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.latent_dim() {
            return Err(WeldError::shape("pca decode", self.latent_dim(), z.cols()));
        }
        let mut x = z.matmul(&self.components)?;
        x.add_row_broadcast(&self.mean);
        Ok(x)
    }

    pub fn save(&self, path: &Path, meta: &NetMeta<'_>) -> Result<()> {
        let mut values = self.mean.clone();
        values.extend_from_slice(self.components.data());
        values.extend_from_slice(&self.eigenvalues);
        let header = CheckpointHeader {
            kind: "pca".into(),
            role: meta.role.into(),
            window: meta.window,
            seed: meta.seed,
            stage: meta.stage.into(),
            spec: None,
            extra: serde_json::to_value(PcaExtra {
                latent_dim: self.latent_dim(),
                ambient_dim: self.ambient_dim(),
            })?,
            n_values: values.len(),
        };
        write_checkpoint(path, &header, &values)
    }

    pub fn load(path: &Path) -> Result<PcaModel> {
        let (header, values) = read_checkpoint(path)?;
        if header.kind != "pca" {
            return Err(WeldError::invalid(format!(
                "{} holds a {:?} checkpoint, not pca",
                path.display(),
                header.kind
            )));
        }
        let extra: PcaExtra = serde_json::from_value(header.extra)?;
        let (d, dim) = (extra.latent_dim, extra.ambient_dim);
        if values.len() != dim + d * dim + d {
            return Err(WeldError::shape("pca checkpoint", dim + d * dim + d, values.len()));
        }
        Ok(PcaModel {
            mean: values[..dim].to_vec(),
            components: Matrix::new(d, dim, values[dim..dim + d * dim].to_vec())?,
            eigenvalues: values[dim + d * dim..].to_vec(),
        })
    }
}
