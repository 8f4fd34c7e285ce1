//! Data generation: grids, initial-condition families, Gaussian random
//! fields, exact transport, spectral Burgers/KdV solvers, and datasets.

pub mod dataset;
pub mod grf;
pub mod grid;
pub mod initial;
pub mod spectral;
pub mod transport;

pub use dataset::{gen_dataset, split_indices, GenConfig, Split, TrajectoryDataset};
pub use grf::{sample_grf, GrfSample, GrfSpec};
pub use grid::{SpatialGrid, TimeGrid};
pub use initial::{hat, soliton, Equation, Family};
pub use spectral::{solve, solve_burgers, solve_kdv, Pde, SolverOptions};
pub use transport::transport_solution;
