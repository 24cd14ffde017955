//! Surface geometry: charts, fundamental forms, curvatures and the
//! quantities that control the thin-layer reduction.
//!
//! Conventions (used without exception throughout the crate):
//! * normal `n = r_u x r_v / |r_u x r_v|`, outward for the closed presets;
//! * extrinsic curvature `K_ab = (d_a n) . r_b = -n . r_ab`;
//! * `M = tr(g^{-1} K)` is the *sum* of the principal curvatures
//!   (unit sphere: `M = 2`), and `K_gauss = det(g^{-1} K)` their product.

mod brioschi;
mod chart;
mod presets;

pub use brioschi::intrinsic_gauss_curvature;
pub use chart::{ChartJet, ChartTable, JetFn, PosFn, SurfaceChart, FD_STEP_REL};
pub use presets::{catenoid, cylinder, helicoid, plane, sphere, torus, SPHERE_POLE_CLIP};

use nalgebra::{Matrix2, Vector3};

use crate::err::{Error, Result, EPS_DEG};

/// Everything the assembly and field code needs at one surface point.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub u: f64,
    pub v: f64,
    pub position: Vector3<f64>,
    /// Tangent vectors `r_u`, `r_v` (not normalized).
    pub e_u: Vector3<f64>,
    pub e_v: Vector3<f64>,
    /// Unit normal `r_u x r_v / |.|`.
    pub normal: Vector3<f64>,
    /// First fundamental form `g_ab` and its inverse / determinant.
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    pub det_g: f64,
    /// Extrinsic curvature `K_ab = -n . r_ab` (covariant components).
    pub shape: Matrix2<f64>,
    /// `M = tr(g^{-1} K)`: sum of principal curvatures.
    pub mean_curv: f64,
    /// `K_gauss = det(g^{-1} K)`: product of principal curvatures.
    pub gauss_curv: f64,
}

/// Evaluate the full geometric state at `(u, v)`.
///
/// Fails with [`Error::DegenerateChart`] when `det g` is not safely
/// positive relative to the local metric scale.
pub fn sample_geometry(chart: &SurfaceChart, u: f64, v: f64) -> Result<GeometrySample> {
    let j = chart.jet(u, v)?;
    let e = j.xu.dot(&j.xu);
    let f = j.xu.dot(&j.xv);
    let g = j.xv.dot(&j.xv);
    let det_g = e * g - f * f;
    let scale = 0.5 * (e + g);
    if !(det_g > EPS_DEG * scale * scale) || !det_g.is_finite() {
        return Err(Error::DegenerateChart { u, v, det_g });
    }
    let normal = j.xu.cross(&j.xv) / det_g.sqrt();

    let metric = Matrix2::new(e, f, f, g);
    let metric_inv = Matrix2::new(g, -f, -f, e) / det_g;

    let k11 = -normal.dot(&j.xuu);
    let k12 = -normal.dot(&j.xuv);
    let k22 = -normal.dot(&j.xvv);
    let shape = Matrix2::new(k11, k12, k12, k22);

    // Weingarten map W = g^{-1} K; its trace and determinant are the
    // summed and multiplied principal curvatures.
    let w = metric_inv * shape;
    let mean_curv = w.trace();
    let gauss_curv = w.determinant();

    Ok(GeometrySample {
        u,
        v,
        position: j.x,
        e_u: j.xu,
        e_v: j.xv,
        normal,
        metric,
        metric_inv,
        det_g,
        shape,
        mean_curv,
        gauss_curv,
    })
}

/// Thin-layer volume factor `xi(x3) = 1 - M x3 + K_gauss x3^2`.
///
/// Equal to `(1 - k1 x3)(1 - k2 x3)` with the principal curvatures
/// `k1, k2`, and exactly the ratio `sqrt(det G(x3) / det g)` of the
/// offset-surface metric determinant to the surface one.
pub fn xi_factor(s: &GeometrySample, x3: f64) -> f64 {
    1.0 - s.mean_curv * x3 + s.gauss_curv * x3 * x3
}

/// Metric of the offset surface at normal distance `x3`:
/// `G(x3) = g - 2 x3 K + x3^2 K g^{-1} K`.
pub fn offset_metric(s: &GeometrySample, x3: f64) -> Matrix2<f64> {
    s.metric - 2.0 * x3 * s.shape + x3 * x3 * (s.shape * s.metric_inv * s.shape)
}

/// Curvature-induced potential of the thin-layer reduction,
/// `V0 = -((M/2)^2 - K_gauss) / (2 m)`.
///
/// Never positive: `(M/2)^2 - K_gauss = ((k1 - k2)/2)^2 >= 0`. Vanishes
/// identically on spheres and planes, and equals `-1/(8 m r^2)` on a
/// cylinder of radius `r`.
pub fn geometric_potential(s: &GeometrySample, mass: f64) -> f64 {
    let half_m = 0.5 * s.mean_curv;
    -(half_m * half_m - s.gauss_curv) / (2.0 * mass)
}

/// Side-by-side extrinsic and intrinsic Gaussian curvature at one point.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureCheck {
    /// `det(g^{-1} K)` from the embedding.
    pub extrinsic: f64,
    /// Brioschi value from the metric alone.
    pub intrinsic: f64,
    /// `|extrinsic - intrinsic|`.
    pub defect: f64,
}

/// Compare the two routes to the Gaussian curvature. The agreement is a
/// strong end-to-end test of jets, forms and curvature code.
pub fn egregium_check(chart: &SurfaceChart, u: f64, v: f64) -> Result<CurvatureCheck> {
    let s = sample_geometry(chart, u, v)?;
    let intrinsic = intrinsic_gauss_curvature(chart, u, v)?;
    Ok(CurvatureCheck {
        extrinsic: s.gauss_curv,
        intrinsic,
        defect: (s.gauss_curv - intrinsic).abs(),
    })
}
