//! Decomposition of an ambient vector potential into surface components
//! and the pointwise differential probes (divergence, curl) used by the
//! consistency checks.

use nalgebra::{Vector2, Vector3};

use crate::err::{Error, Result};
use crate::geometry::GeometrySample;

use super::field::VectorPotentialField;

/// Default step for the ambient finite-difference probes.
pub const PROBE_DELTA: f64 = 1e-5;

/// The potential as seen from one surface point.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFieldSample {
    /// Covariant tangential components `A_a = A . r_a`.
    pub a_cov: Vector2<f64>,
    /// Contravariant tangential components `A^a = g^{ab} A_b`.
    pub a_con: Vector2<f64>,
    /// Normal component `A3 = A . n`.
    pub a3: f64,
    /// Normal derivative of the normal component at the surface,
    /// `d A3 / d x3`, from a symmetric normal-offset probe.
    pub da3_dx3: f64,
    /// Ambient divergence `div A` by central differences.
    pub div3: f64,
    /// `|A|^2` at the surface point.
    pub a_sq: f64,
    /// Scalar potential at the surface point.
    pub a_t: f64,
}

fn finite(v: &Vector3<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Ambient divergence of the potential at `x` by central differences
/// with step `delta`.
pub fn ambient_divergence(field: &VectorPotentialField, x: &Vector3<f64>, delta: f64) -> f64 {
    let mut div = 0.0;
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = delta;
        div += (field.a(&(x + e))[k] - field.a(&(x - e))[k]) / (2.0 * delta);
    }
    div
}

/// Ambient curl of the potential at `x` by central differences.
pub fn ambient_curl(field: &VectorPotentialField, x: &Vector3<f64>, delta: f64) -> Vector3<f64> {
    let d = |k: usize| {
        let mut e = Vector3::zeros();
        e[k] = delta;
        (field.a(&(x + e)) - field.a(&(x - e))) / (2.0 * delta)
    };
    let dx = d(0);
    let dy = d(1);
    let dz = d(2);
    Vector3::new(dz.y - dy.z, dx.z - dz.x, dy.x - dx.y)
}

/// Split the potential into tangential and normal parts at one surface
/// point, with the ambient derivative probes evaluated alongside.
///
/// Fails with [`Error::SourceOnSurface`] when any evaluation (including
/// the offset probes) is non-finite, which is how quadrature potentials
/// report a source collision.
pub fn decompose_on_surface(
    field: &VectorPotentialField,
    s: &GeometrySample,
    delta: f64,
) -> Result<SurfaceFieldSample> {
    let a = field.a(&s.position);
    let ap = field.a(&(s.position + s.normal * delta));
    let am = field.a(&(s.position - s.normal * delta));
    if !finite(&a) || !finite(&ap) || !finite(&am) {
        return Err(Error::SourceOnSurface(format!(
            "potential not finite near (u, v) = ({:.6e}, {:.6e})",
            s.u, s.v
        )));
    }
    let a_cov = Vector2::new(a.dot(&s.e_u), a.dot(&s.e_v));
    let a_con = s.metric_inv * a_cov;
    let div3 = ambient_divergence(field, &s.position, delta);
    if !div3.is_finite() {
        return Err(Error::SourceOnSurface(format!(
            "divergence probe not finite at (u, v) = ({:.6e}, {:.6e})",
            s.u, s.v
        )));
    }
    Ok(SurfaceFieldSample {
        a_cov,
        a_con,
        a3: a.dot(&s.normal),
        da3_dx3: (ap - am).dot(&s.normal) / (2.0 * delta),
        div3,
        a_sq: a.dot(&a),
        a_t: field.a_t(&s.position),
    })
}

/// Surface form of the ambient divergence at one point,
///
/// ```text
/// div A = div_par(A_par) + dA3/dx3 + A3 tr(W)
/// ```
///
/// where `div_par` is the covariant surface divergence
/// `(1/sqrt g) d_a (sqrt g A^a)` supplied by the caller (it needs
/// neighbouring grid values, which a point sample does not have) and
/// `tr(W)` is the summed principal curvature carried in
/// [`GeometrySample::mean_curv`]. The identity is exact in the continuum:
/// splitting `A = A_par + A3 n` and using `div_par n = tr(W)` gives
/// the curvature term, and the normal derivative of `A3` is taken along
/// the straight normal line with `n` held fixed, which is exactly what
/// [`decompose_on_surface`] samples. Discretely it holds up to the
/// stencil errors of `surface_div_apar` and the FD probes.
pub fn surface_divergence_identity(
    s: &SurfaceFieldSample,
    sample: &GeometrySample,
    surface_div_apar: f64,
) -> f64 {
    surface_div_apar + s.da3_dx3 + s.a3 * sample.mean_curv
}

/// Rebuild the ambient vector from its surface components,
/// `A = A^a r_a + A3 n`. Exact up to floating point: the tangents plus
/// the normal span R^3.
pub fn reconstruct(s: &GeometrySample, sf: &SurfaceFieldSample) -> Vector3<f64> {
    s.e_u * sf.a_con[0] + s.e_v * sf.a_con[1] + s.normal * sf.a3
}

/// Largest `|div A|` over a set of probe points — the residual against
/// the transverse (Lorentz-type) gauge condition the analytic presets
/// satisfy.
pub fn lorentz_residual(
    field: &VectorPotentialField,
    points: &[Vector3<f64>],
    delta: f64,
) -> f64 {
    points
        .iter()
        .map(|p| ambient_divergence(field, p, delta).abs())
        .fold(0.0, f64::max)
}

/// Largest curl difference between two potentials over probe points.
/// A gauge transformation must leave this at finite-difference noise.
pub fn curl_difference(
    a: &VectorPotentialField,
    b: &VectorPotentialField,
    points: &[Vector3<f64>],
    delta: f64,
) -> f64 {
    points
        .iter()
        .map(|p| (ambient_curl(a, p, delta) - ambient_curl(b, p, delta)).norm())
        .fold(0.0, f64::max)
}
