//! Periodic Gaussian random fields with covariance
//! `amplitude^2 (-d^2/dx^2 + k0^2)^(-smoothness)`, sampled mode by mode.
//!
//! A sample is `u(x) = sum_k xi_k exp(2 pi i k (x - start) / L)` with
//! `xi_{-k} = conj(xi_k)`, `E|xi_k|^2 = std_k^2` and
//! `std_k = amplitude * ((2 pi k / L)^2 + k0^2)^(-smoothness / 2)`.
//! The Nyquist mode is left at zero so shifted evaluations stay real.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use crate::error::{Result, WeldError};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub amplitude: f64,
    pub length_scale_k0: f64,
    /// Exponent of the covariance operator (2.5 for the Burgers families);
    /// mode standard deviations decay with half of it.
    pub smoothness_exponent: f64,
    pub grid: SpatialGrid,
}

impl GrfSpec {
    /// `N(0, 7^4 (-d^2/dx^2 + 7^2 I)^(-2.5))` on the given grid.
    pub fn burgers(grid: SpatialGrid) -> Self {
        GrfSpec {
            amplitude: 49.0,
            length_scale_k0: 7.0,
            smoothness_exponent: 2.5,
            grid,
        }
    }

    /// Standard deviation of Fourier coefficient `k`.
    pub fn mode_std(&self, k: usize) -> f64 {
        let w = 2.0 * std::f64::consts::PI * k as f64 / self.grid.length();
        self.amplitude * (w * w + self.length_scale_k0 * self.length_scale_k0).powf(-self.smoothness_exponent / 2.0)
    }

    /// Highest sampled mode: one below Nyquist.
    pub fn max_mode(&self) -> usize {
        self.grid.n_points / 2 - 1
    }

    /// Pointwise variance `sum_k std_k^2` over the sampled modes.
    pub fn pointwise_variance(&self) -> f64 {
        let s0 = self.mode_std(0);
        s0 * s0 + 2.0 * (1..=self.max_mode()).map(|k| self.mode_std(k).powi(2)).sum::<f64>()
    }
}

/// Fourier coefficients `xi_0 .. xi_K` of one field.
#[derive(Clone, Debug, PartialEq)]
pub struct GrfSample {
    coeffs: Vec<Complex64>,
    start: f64,
    length: f64,
}

pub fn sample_grf(spec: &GrfSpec, seed: u64) -> Result<GrfSample> {
    if !spec.grid.periodic {
        return Err(WeldError::invalid("Gaussian random fields are sampled on periodic grids only"));
    }
    let mut rng = rng::rng_from(seed);
    let mut coeffs = Vec::with_capacity(spec.max_mode() + 1);
    let z0: f64 = rng.sample(StandardNormal);
    coeffs.push(Complex64::new(spec.mode_std(0) * z0, 0.0));
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=spec.max_mode() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let s = spec.mode_std(k) * half;
        coeffs.push(Complex64::new(s * re, s * im));
    }
    Ok(GrfSample {
        coeffs,
        start: spec.grid.domain_start,
        length: spec.grid.length(),
    })
}

impl GrfSample {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Values of `u(x - shift)` at the points of a periodic grid on the same
    /// domain. The shift is applied exactly as a phase factor.
    pub fn evaluate_shifted(&self, grid: &SpatialGrid, shift: f64) -> Result<Vec<f64>> {
        if !grid.periodic || (grid.length() - self.length).abs() > 1e-12 || (grid.domain_start - self.start).abs() > 1e-12 {
            return Err(WeldError::invalid("field must be evaluated on a periodic grid over its own domain"));
        }
        let n = grid.n_points;
        if n < 2 * self.coeffs.len() {
            return Err(WeldError::invalid(format!(
                "grid of {n} points cannot resolve {} modes",
                self.coeffs.len() - 1
            )));
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        let tau = 2.0 * std::f64::consts::PI;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -tau * k as f64 * shift / self.length);
            let v = c * phase;
            spec[k] = v;
            if k > 0 {
                spec[n - k] = v.conj();
            }
        }
        // Unnormalized inverse transform sums the series at x_j.
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        Ok(spec.into_iter().map(|c| c.re).collect())
    }

    pub fn evaluate(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        self.evaluate_shifted(grid, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(n, 0.0, 1.0, true).unwrap()
    }

    #[test]
    fn zero_mode_std() {
        let s = GrfSpec::burgers(grid(64));
        // 49 * 49^(-1.25) = 49^(-0.25)
        assert!((s.mode_std(0) - 49f64.powf(-0.25)).abs() < 1e-15);
        // 7^(-1/2), 0.3780 to four places.
        assert!((s.mode_std(0) - 0.3780).abs() < 5e-5);
    }

    #[test]
    fn deterministic_and_real() {
        let s = GrfSpec::burgers(grid(64));
        let a = sample_grf(&s, 3).unwrap().evaluate(&s.grid).unwrap();
        let b = sample_grf(&s, 3).unwrap().evaluate(&s.grid).unwrap();
        assert_eq!(a, b);
        let c = sample_grf(&s, 4).unwrap().evaluate(&s.grid).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn matches_direct_series() {
        let s = GrfSpec::burgers(grid(32));
        let f = sample_grf(&s, 11).unwrap();
        let shift = 0.3137;
        let v = f.evaluate_shifted(&s.grid, shift).unwrap();
        for (j, x) in s.grid.points().into_iter().enumerate() {
            let mut u = f.coefficients()[0].re;
            for (k, c) in f.coefficients().iter().enumerate().skip(1) {
                let arg = 2.0 * std::f64::consts::PI * k as f64 * (x - shift);
                u += 2.0 * (c * Complex64::from_polar(1.0, arg)).re;
            }
            assert!((u - v[j]).abs() < 1e-12, "{u} vs {}", v[j]);
        }
    }

    #[test]
    fn shift_by_grid_multiple_is_rotation() {
        let s = GrfSpec::burgers(grid(64));
        let f = sample_grf(&s, 1).unwrap();
        let v = f.evaluate(&s.grid).unwrap();
        let w = f.evaluate_shifted(&s.grid, 5.0 / 64.0).unwrap();
        for j in 0..64 {
            assert!((w[(j + 5) % 64] - v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn refined_grid_interpolates() {
        let s = GrfSpec::burgers(grid(32));
        let f = sample_grf(&s, 2).unwrap();
        let coarse = f.evaluate(&s.grid).unwrap();
        let fine = f.evaluate(&s.grid.refined(4).unwrap()).unwrap();
        for j in 0..32 {
            assert!((coarse[j] - fine[4 * j]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_periodic_rejected() {
        let s = GrfSpec::burgers(SpatialGrid::new(16, 0.0, 1.0, false).unwrap());
        assert!(sample_grf(&s, 0).is_err());
    }
}
