//! Grids and discrete Hamiltonians.

mod grid;
mod operator;
mod reduction;
mod slab_ops;
mod surface_ops;

pub use grid::{EdgeRule, SlabGrid, SurfaceGrid, THIN_WALL_LIMIT};
pub use operator::{DiscreteOperator, OperatorMetadata, ParticleParams};
pub use reduction::xi_reduction_check;
pub use slab_ops::{assemble_slab, BoundaryCondition, Confinement};
pub use surface_ops::{
    anomalous_delta, assemble_laplace_beltrami, assemble_naive, assemble_variational,
    sample_surface_field, surface_divergence,
};
