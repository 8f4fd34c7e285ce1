//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{Result, WeldError};
use crate::neural::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order and the matching unit eigenvectors as
/// the columns of the returned matrix.
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Sweeps until the off-diagonal Frobenius norm is below `tol * ||A||_F`.
pub fn symmetric_eigen(a: &Matrix, tol: f64) -> Result<SymmetricEigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(WeldError::shape(
            "symmetric_eigen",
            format!("{n}x{n}"),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if !a.is_finite() {
        return Err(WeldError::numerical("eigendecomposition", "non-finite matrix entry"));
    }
    let mut m = a.data().to_vec();
    let mut v = Matrix::identity(n).into_data();
    let norm = a.frobenius_sq().sqrt();
    let off = |m: &[f64]| {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged || off(&m) <= tol * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (kp, kq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * kp - s * kq;
                    m[k * n + q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * pk - s * qk;
                    m[q * n + k] = s * pk + c * qk;
                }
                for k in 0..n {
                    let (kp, kq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * kp - s * kq;
                    v[k * n + q] = s * kp + c * kq;
                }
            }
        }
    }
    if !converged && off(&m) > tol * norm {
        return Err(WeldError::numerical(
            "eigendecomposition",
            format!("Jacobi did not converge in {MAX_SWEEPS} sweeps"),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, v[k * n + i]);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Eigenvalues of a symmetric 3x3 matrix from its characteristic cubic
    /// (trigonometric solution), descending.
    fn cubic_eigenvalues(a: &Matrix) -> [f64; 3] {
        let g = |i, j| a.get(i, j);
        let p1 = g(0, 1).powi(2) + g(0, 2).powi(2) + g(1, 2).powi(2);
        let q = (g(0, 0) + g(1, 1) + g(2, 2)) / 3.0;
        let p2 = (g(0, 0) - q).powi(2) + (g(1, 1) - q).powi(2) + (g(2, 2) - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = |i, j| (g(i, j) - if i == j { q } else { 0.0 }) / p;
        let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [e1, 3.0 * q - e1 - e3, e3]
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    #[test]
    fn matches_cubic_oracle() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0, -2.0], vec![1.0, 2.0, 0.5], vec![-2.0, 0.5, 3.0]]).unwrap();
        let eig = symmetric_eigen(&a, 1e-12).unwrap();
        let expect = cubic_eigenvalues(&a);
        for i in 0..3 {
            assert!((eig.values[i] - expect[i]).abs() < 1e-10, "{:?} vs {expect:?}", eig.values);
            // Eigenvector oracle: null vector of A - lambda I from a cross
            // product of two of its rows.
            let row = |r: usize| [0, 1, 2].map(|c| a.get(r, c) - if r == c { expect[i] } else { 0.0 });
            let w = cross(row(0), row(1));
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = (0..3).map(|k| eig.vectors.get(k, i) * w[k] / nw).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10, "eigenvector {i}: |dot| = {}", dot.abs());
        }
    }

    #[test]
    fn diagonal_is_sorted_and_exact() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        let eig = symmetric_eigen(&a, 1e-12).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(eig.vectors.get(1, 0), 1.0);
    }

    #[test]
    fn reconstructs_matrix() {
        let n = 7;
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = ((i * 31 + j * 17) % 11) as f64 - 5.0;
                a.set(i, j, x);
                a.set(j, i, x);
            }
        }
        let eig = symmetric_eigen(&a, 1e-12).unwrap();
        let mut lam = Matrix::zeros(n, n);
        for i in 0..n {
            lam.set(i, i, eig.values[i]);
        }
        let back = eig.vectors.matmul(&lam).unwrap().matmul_t(&eig.vectors).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_sq().sqrt() < 1e-10);
        let vtv = eig.vectors.t_matmul(&eig.vectors).unwrap();
        assert!(vtv.sub(&Matrix::identity(n)).unwrap().frobenius_sq().sqrt() < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(symmetric_eigen(&Matrix::zeros(2, 3), 1e-12).is_err());
    }
}
