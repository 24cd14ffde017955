//! Intrinsic Gaussian curvature from the first fundamental form alone
//! (Brioschi's formula), used to audit the extrinsic curvature pipeline:
//! `det(g^{-1} K)` must agree with the purely metric value.

use nalgebra::Matrix3;

use crate::err::{Error, Result};

use super::chart::SurfaceChart;
use super::sample_geometry;

/// Relative step (fraction of the domain span) for the single numerical
/// derivative taken on top of the jet-supplied form derivatives.
const FORM_STEP_REL: f64 = 1e-3;

/// First fundamental form with its first parameter derivatives, all
/// obtained from one second-order jet (no numerical differentiation
/// here).
struct FormJet {
    e: f64,
    f: f64,
    g: f64,
    e_u: f64,
    e_v: f64,
    f_u: f64,
    f_v: f64,
    g_u: f64,
    g_v: f64,
}

fn form_jet(chart: &SurfaceChart, u: f64, v: f64) -> Result<FormJet> {
    // Reuse the degeneracy check in sample_geometry, then recompute the
    // derivative combinations from the raw jet.
    sample_geometry(chart, u, v)?;
    let j = chart.jet(u, v)?;
    Ok(FormJet {
        e: j.xu.dot(&j.xu),
        f: j.xu.dot(&j.xv),
        g: j.xv.dot(&j.xv),
        e_u: 2.0 * j.xu.dot(&j.xuu),
        e_v: 2.0 * j.xu.dot(&j.xuv),
        f_u: j.xuu.dot(&j.xv) + j.xu.dot(&j.xuv),
        f_v: j.xuv.dot(&j.xv) + j.xu.dot(&j.xvv),
        g_u: 2.0 * j.xv.dot(&j.xuv),
        g_v: 2.0 * j.xv.dot(&j.xvv),
    })
}

/// Derivative of a scalar function of one parameter, fourth-order central
/// when the stencil fits in `[lo, hi]` (or the direction is periodic /
/// the chart is evaluable outside its domain), second-order one-sided
/// otherwise.
fn d1(
    f: &dyn Fn(f64) -> Result<f64>,
    x: f64,
    h: f64,
    lo: f64,
    hi: f64,
    unbounded: bool,
) -> Result<f64> {
    if unbounded || (x - 2.0 * h >= lo && x + 2.0 * h <= hi) {
        Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?)
            / (12.0 * h))
    } else if x - h >= lo && x + h <= hi {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    } else if x + 2.0 * h <= hi {
        Ok((-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
    } else if x - 2.0 * h >= lo {
        Ok((3.0 * f(x)? - 4.0 * f(x - h)? + f(x - 2.0 * h)?) / (2.0 * h))
    } else {
        Err(Error::GridTooCoarse(
            "domain too small for the curvature stencil".into(),
        ))
    }
}

/// Gaussian curvature from the metric alone.
///
/// The second derivatives of the form coefficients (`E_vv`, `G_uu`,
/// `F_uv`) are the only numerically differentiated quantities; they act
/// on the exact (jet-supplied) first derivatives, so only one layer of
/// finite differencing is ever stacked. For tabulated charts the step is
/// the lattice spacing.
pub fn intrinsic_gauss_curvature(chart: &SurfaceChart, u: f64, v: f64) -> Result<f64> {
    let (hu, hv) = match chart.table() {
        Some(t) => (t.du, t.dv),
        None => (FORM_STEP_REL * chart.span(0), FORM_STEP_REL * chart.span(1)),
    };
    let [du_dom, dv_dom] = chart.domain;
    // Closure charts tolerate small excursions past the domain edge;
    // tabulated ones do not.
    let open_u = !chart.is_table() || chart.periodic[0];
    let open_v = !chart.is_table() || chart.periodic[1];

    let base = form_jet(chart, u, v)?;

    let e_v_at = |vv: f64| form_jet(chart, u, vv).map(|fj| fj.e_v);
    let g_u_at = |uu: f64| form_jet(chart, uu, v).map(|fj| fj.g_u);
    let f_v_at = |uu: f64| form_jet(chart, uu, v).map(|fj| fj.f_v);

    let e_vv = d1(&e_v_at, v, hv, dv_dom[0], dv_dom[1], open_v)?;
    let g_uu = d1(&g_u_at, u, hu, du_dom[0], du_dom[1], open_u)?;
    let f_uv = d1(&f_v_at, u, hu, du_dom[0], du_dom[1], open_u)?;

    let FormJet { e, f, g, e_u, e_v, f_u, f_v, g_u, g_v } = base;

    let m1 = Matrix3::new(
        -0.5 * e_vv + f_uv - 0.5 * g_uu,
        0.5 * e_u,
        f_u - 0.5 * e_v,
        f_v - 0.5 * g_u,
        e,
        f,
        0.5 * g_v,
        f,
        g,
    );
    let m2 = Matrix3::new(
        0.0,
        0.5 * e_v,
        0.5 * g_u,
        0.5 * e_v,
        e,
        f,
        0.5 * g_u,
        f,
        g,
    );

    let det_g = e * g - f * f;
    Ok((m1.determinant() - m2.determinant()) / (det_g * det_g))
}
