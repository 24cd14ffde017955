//! Eigensolvers and time evolution.

mod arnoldi;
mod dense;
mod evolve;

pub use arnoldi::{solve_dense, solve_lowest, SolverConfig, SpectrumResult};
pub use dense::{dense_eig, DenseEig, DenseMatrix};
pub use evolve::{norm_drift, NormDriftReport};
