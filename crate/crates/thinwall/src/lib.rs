//! Quantum mechanics of a charged particle confined to a thin curved layer.
//!
//! The crate builds everything needed to go from a parametrized surface to a
//! converged spectrum of the confined particle:
//!
//! * [`geometry`] — charts, fundamental forms, curvatures, the thin-layer
//!   volume factor and the curvature-induced potential;
//! * [`em`] — vector potentials (analytic presets and Biot–Savart quadrature
//!   over polyline currents) and their decomposition into surface components;
//! * [`assembly`] — finite-difference grids and sparse Hamiltonians: the
//!   dimensionally reduced surface operators in two variants that differ by a
//!   curvature-coupling bookkeeping term, and the full three-dimensional slab
//!   operator used to audit the reduction;
//! * [`sparse`] / [`solve`] — compressed sparse storage, a complex sparse LU,
//!   shift-invert Krylov eigensolvers with a dense cross-check path, and a
//!   norm-tracking Cayley propagator;
//! * [`analysis`] — hermiticity diagnostics, Schmidt separability of slab
//!   states, variant comparison and spectral derivative probes;
//! * [`scenario`] / [`io`] — declarative TOML run descriptions, report
//!   writers and reproducibility manifests.
//!
//! Units: `hbar = 1`, `c = 1`, and the magnetostatic prefactor `mu0 / 4 pi`
//! is absorbed into the current, so a wire of current `I` at distance `rho`
//! produces `|A| = 2 I ln(1/rho)`.
//!
//! Sign conventions, fixed once and used everywhere: the normal is
//! `n = r_u x r_v / |r_u x r_v|` (outward for the closed presets), the
//! extrinsic curvature is `K_ab = -n . r_ab`, and `M = tr(g^{-1} K)` is the
//! sum of principal curvatures, so the unit sphere has `M = 2` and
//! `K_gauss = 1`.

pub mod analysis;
pub mod assembly;
pub mod em;
pub mod err;
pub mod geometry;
pub mod io;
pub mod scenario;
pub mod solve;
pub mod sparse;

pub use err::{Error, Result};

/// Statement embedded in every manifest and report header.
pub const UNITS: &str = "hbar = 1, c = 1, mu0/(4 pi) = 1";
