//! Fourier pseudo-spectral solvers for periodic 1-D equations of the form
//! `u_t = L u - (u^2 / 2)_x`, integrated with ETDRK4 (Cox & Matthews, with
//! the contour-integral coefficients of Kassam & Trefethen).
//!
//! * Burgers: `L = nu d^2/dx^2`
//! * KdV:     `L = -d^3/dx^3`
//!
//! The quadratic term is dealiased with the 2/3 rule.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::grid::{SpatialGrid, TimeGrid};
use crate::error::{Result, WeldError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "lowercase")]
pub enum Pde {
    Burgers { nu: f64 },
    Kdv,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// ETDRK4 steps per output time step.
    pub substeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { substeps: MIN_SUBSTEPS }
    }
}

pub const MIN_SUBSTEPS: usize = 8;
const BLOWUP_LIMIT: f64 = 1e6;
const CONTOUR_POINTS: usize = 64;

/// Precomputed ETDRK4 stepper for one grid and step size.
pub struct Etdrk4 {
    n: usize,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    /// `-(i k / 2)` on retained modes, zero on dealiased ones.
    nonlinear: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

/// Signed integer wavenumber of FFT index `m`.
fn signed_mode(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

impl Etdrk4 {
    pub fn new(pde: Pde, grid: &SpatialGrid, h: f64) -> Result<Self> {
        if !grid.periodic {
            return Err(WeldError::invalid("spectral solver needs a periodic grid"));
        }
        if !(h > 0.0) {
            return Err(WeldError::invalid("step size must be positive"));
        }
        if let Pde::Burgers { nu } = pde {
            if !(nu > 0.0) {
                return Err(WeldError::invalid("Burgers viscosity must be positive"));
            }
        }
        let n = grid.n_points;
        let tau = 2.0 * std::f64::consts::PI;
        let cutoff = n as i64 / 3;
        let i = Complex64::new(0.0, 1.0);
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, tau * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();

        let mut st = Etdrk4 {
            n,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
            nonlinear: Vec::with_capacity(n),
            fft: FftPlanner::new().plan_fft_forward(n),
            ifft: FftPlanner::new().plan_fft_inverse(n),
            scratch: vec![Complex64::new(0.0, 0.0); n],
        };
        for m in 0..n {
            let sm = signed_mode(m, n);
            let nyquist = n.is_multiple_of(2) && m == n / 2;
            let k = tau * sm as f64 / grid.length();
            let lin = match pde {
                Pde::Burgers { nu } => Complex64::new(-nu * k * k, 0.0),
                // -(ik)^3 = i k^3; the Nyquist mode has no real odd derivative.
                Pde::Kdv if nyquist => Complex64::new(0.0, 0.0),
                Pde::Kdv => Complex64::new(0.0, k * k * k),
            };
            let lh = lin * h;
            st.e.push(lh.exp());
            st.e2.push((lh / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
            );
            for &root in &roots {
                let r = lh + root;
                let er = r.exp();
                let r3 = r * r * r;
                q += ((r / 2.0).exp() - 1.0) / r;
                f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                f2 += (2.0 + r + er * (r - 2.0)) / r3;
                f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            let scale = h / CONTOUR_POINTS as f64;
            let real_only = matches!(pde, Pde::Burgers { .. });
            let fix = |c: Complex64| if real_only { Complex64::new(c.re * scale, 0.0) } else { c * scale };
            st.q.push(fix(q));
            st.f1.push(fix(f1));
            st.f2.push(fix(f2));
            st.f3.push(fix(f3));
            let keep = sm.abs() <= cutoff && !nyquist;
            st.nonlinear.push(if keep { -i * k / 2.0 } else { Complex64::new(0.0, 0.0) });
        }
        Ok(st)
    }

    /// Fourier transform of a real field.
    pub fn to_spectral(&mut self, u: &[f64]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process_with_scratch(&mut v, &mut self.scratch);
        v
    }

    /// Inverse transform back to real grid values.
    pub fn to_physical(&mut self, v: &[Complex64]) -> Vec<f64> {
        let mut w = v.to_vec();
        self.ifft.process_with_scratch(&mut w, &mut self.scratch);
        let inv = 1.0 / self.n as f64;
        w.into_iter().map(|c| c.re * inv).collect()
    }

    fn nonlinear_term(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(v);
        self.ifft.process_with_scratch(out, &mut self.scratch);
        let inv = 1.0 / self.n as f64;
        for c in out.iter_mut() {
            let u = c.re * inv;
            *c = Complex64::new(u * u, 0.0);
        }
        self.fft.process_with_scratch(out, &mut self.scratch);
        for (c, g) in out.iter_mut().zip(&self.nonlinear) {
            *c *= g;
        }
    }

    /// Advances the spectral state `v` by one step.
    pub fn step(&mut self, v: &mut [Complex64]) {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut nv = vec![zero; n];
        let mut na = vec![zero; n];
        let mut nb = vec![zero; n];
        let mut nc = vec![zero; n];
        let mut a = vec![zero; n];
        let mut b = vec![zero; n];
        let mut c = vec![zero; n];

        self.nonlinear_term(v, &mut nv);
        for m in 0..n {
            a[m] = self.e2[m] * v[m] + self.q[m] * nv[m];
        }
        self.nonlinear_term(&a, &mut na);
        for m in 0..n {
            b[m] = self.e2[m] * v[m] + self.q[m] * na[m];
        }
        self.nonlinear_term(&b, &mut nb);
        for m in 0..n {
            c[m] = self.e2[m] * a[m] + self.q[m] * (2.0 * nb[m] - nv[m]);
        }
        self.nonlinear_term(&c, &mut nc);
        for m in 0..n {
            v[m] = self.e[m] * v[m] + nv[m] * self.f1[m] + 2.0 * (na[m] + nb[m]) * self.f2[m] + nc[m] * self.f3[m];
        }
    }
}

/// Integrates `u0` over the time grid and returns one row per output time.
pub fn solve(pde: Pde, u0: &[f64], time: &TimeGrid, grid: &SpatialGrid, opts: SolverOptions) -> Result<Vec<Vec<f64>>> {
    if u0.len() != grid.n_points {
        return Err(WeldError::shape("spectral solve", grid.n_points, u0.len()));
    }
    let substeps = opts.substeps.max(MIN_SUBSTEPS);
    let h = time.dt() / substeps as f64;
    let mut st = Etdrk4::new(pde, grid, h)?;
    let mut v = st.to_spectral(u0);
    let mut out = Vec::with_capacity(time.n_steps);
    out.push(u0.to_vec());
    for k in 1..time.n_steps {
        for _ in 0..substeps {
            st.step(&mut v);
        }
        let u = st.to_physical(&v);
        if let Some(bad) = u.iter().find(|x| !x.is_finite() || x.abs() > BLOWUP_LIMIT) {
            return Err(WeldError::BlowUp {
                step: k,
                detail: format!("{pde:?}: field value {bad} at t = {}", time.time(k)),
            });
        }
        out.push(u);
    }
    Ok(out)
}

pub fn solve_burgers(u0: &[f64], nu: f64, time: &TimeGrid, grid: &SpatialGrid, opts: SolverOptions) -> Result<Vec<Vec<f64>>> {
    solve(Pde::Burgers { nu }, u0, time, grid, opts)
}

pub fn solve_kdv(u0: &[f64], time: &TimeGrid, grid: &SpatialGrid, opts: SolverOptions) -> Result<Vec<Vec<f64>>> {
    solve(Pde::Kdv, u0, time, grid, opts)
}
