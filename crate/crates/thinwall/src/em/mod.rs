//! Electromagnetic sources: vector potentials, quadrature over polyline
//! currents, gauge transformations and the surface decomposition.

mod biot_savart;
mod field;
mod surface;

pub use biot_savart::{
    biot_savart_potential, gauss_legendre, loop_potential, solenoid_potential, CurrentSource,
};
pub use field::{gauge_transform, GaugeFunction, VectorPotentialField};
pub use surface::{
    ambient_curl, ambient_divergence, curl_difference, decompose_on_surface, lorentz_residual,
    reconstruct, surface_divergence_identity, SurfaceFieldSample, PROBE_DELTA,
};
