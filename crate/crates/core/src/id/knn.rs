use rand::Rng;
use rayon::prelude::*;

use crate::error::{Result, WeldError};
use crate::neural::Matrix;
use crate::rng::{rng_for, stream};

const BLOCK: usize = 256;
/// Extra candidates kept from the Gram-matrix pass before exact rescoring.
const MARGIN: usize = 8;
const JITTER: f64 = 1e-12;

fn exact_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Sorted Euclidean distances from every point to its `k` nearest other
/// points. Brute force, O(M^2 D): squared distances come from blocked
/// Gram products, then the best `k + 8` candidates per point are rescored
/// exactly so cancellation in `|a|^2 + |b|^2 - 2 a.b` cannot reorder close
/// neighbors.
///
/// Points with a zero nearest-neighbor distance are duplicates; the whole
/// cloud is then perturbed by uniform noise of size `1e-12` times its
/// largest absolute coordinate (fixed seed) and searched again.
pub fn knn_distances(points: &Matrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let m = points.rows();
    if k == 0 || k >= m {
        return Err(WeldError::invalid(format!("need 0 < k < M, got k = {k} with {m} points")));
    }
    if !points.is_finite() {
        return Err(WeldError::invalid("point cloud contains non-finite values"));
    }
    let d = search(points, k)?;
    if d.iter().all(|r| r[0] > 0.0) {
        return Ok(d);
    }
    let scale = points.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut rng = rng_for(0, stream::JITTER);
    let mut p = points.clone();
    for v in p.data_mut() {
        *v += JITTER * scale * rng.gen_range(-1.0..1.0);
    }
    let d = search(&p, k)?;
    if d.iter().any(|r| r[0] == 0.0) {
        return Err(WeldError::numerical(
            "nearest neighbors",
            "zero neighbor distance after perturbation",
        ));
    }
    Ok(d)
}

fn search(points: &Matrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let m = points.rows();
    let keep = (k + MARGIN).min(m - 1);
    let norms: Vec<f64> = points.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let blocks: Vec<usize> = (0..m).step_by(BLOCK).collect();
    let per_block: Vec<Result<Vec<Vec<f64>>>> = blocks
        .par_iter()
        .map(|&b0| {
            let b1 = (b0 + BLOCK).min(m);
            let idx: Vec<usize> = (b0..b1).collect();
            let gram = points.select_rows(&idx).matmul_t(points)?;
            let mut out = Vec::with_capacity(b1 - b0);
            let mut cand: Vec<(f64, usize)> = Vec::with_capacity(m);
            for (r, i) in (b0..b1).enumerate() {
                cand.clear();
                let g = gram.row(r);
                cand.extend((0..m).filter(|&j| j != i).map(|j| (norms[i] + norms[j] - 2.0 * g[j], j)));
                if keep < cand.len() {
                    cand.select_nth_unstable_by(keep - 1, |a, b| a.0.total_cmp(&b.0));
                    cand.truncate(keep);
                }
                let mut exact: Vec<f64> = cand.iter().map(|&(_, j)| exact_dist(points.row(i), points.row(j))).collect();
                exact.sort_by(f64::total_cmp);
                exact.truncate(k);
                out.push(exact);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(m);
    for b in per_block {
        all.extend(b?);
    }
    Ok(all)
}
