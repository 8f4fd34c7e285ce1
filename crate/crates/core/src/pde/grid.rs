use serde::{Deserialize, Serialize};

use crate::error::{Result, WeldError};

/// Equally spaced 1-D grid. Periodic grids leave out the right endpoint;
/// non-periodic grids include both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n_points: usize,
    pub domain_start: f64,
    pub domain_end: f64,
    pub periodic: bool,
}

impl SpatialGrid {
    pub fn new(n_points: usize, domain_start: f64, domain_end: f64, periodic: bool) -> Result<Self> {
        if n_points < 2 {
            return Err(WeldError::invalid("spatial grid needs at least 2 points"));
        }
        if !(domain_end > domain_start) {
            return Err(WeldError::invalid(format!("empty domain [{domain_start}, {domain_end}]")));
        }
        Ok(SpatialGrid {
            n_points,
            domain_start,
            domain_end,
            periodic,
        })
    }

    pub fn length(&self) -> f64 {
        self.domain_end - self.domain_start
    }

    pub fn dx(&self) -> f64 {
        if self.periodic {
            self.length() / self.n_points as f64
        } else {
            self.length() / (self.n_points - 1) as f64
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        if !self.periodic && j == self.n_points - 1 {
            return self.domain_end;
        }
        self.domain_start + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Same domain with `factor` times as many points. Only meaningful for
    /// periodic grids, where every original point stays a grid point.
    pub fn refined(&self, factor: usize) -> Result<SpatialGrid> {
        if !self.periodic {
            return Err(WeldError::invalid("only periodic grids are refined"));
        }
        SpatialGrid::new(self.n_points * factor.max(1), self.domain_start, self.domain_end, true)
    }

    /// Trapezoid-rule integral of grid samples (periodic: plain Riemann sum,
    /// which is the trapezoid rule on a periodic grid).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let dx = self.dx();
        if self.periodic {
            f.iter().sum::<f64>() * dx
        } else {
            let n = f.len();
            dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
        }
    }
}

/// Equally spaced time grid `t_k = k * t_end / (n_steps - 1)`, `k = 0..n_steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(WeldError::invalid("time grid needs at least 2 points"));
        }
        if !(t_end > 0.0) {
            return Err(WeldError::invalid(format!("t_end must be positive, got {t_end}")));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / (self.n_steps - 1) as f64
    }

    /// `k * dt`, except that the last index returns `t_end` exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.time(k)).collect()
    }
}
