//! Exact solutions of `u_t = -u_x` with zero inflow at the left boundary.

use super::grid::SpatialGrid;

/// `u(x, t) = g(x - t)` where `x - t` is still inside the domain, else 0.
/// `g` is evaluated directly at the shifted points, never interpolated.
pub fn transport_solution<G: Fn(f64) -> f64 + ?Sized>(g: &G, t: f64, grid: &SpatialGrid) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|x| {
            let s = x - t;
            if s >= grid.domain_start {
                g(s)
            } else {
                0.0
            }
        })
        .collect()
}
