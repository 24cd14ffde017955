//! Built-in charts with analytic jets.
//!
//! All presets use the convention that `n = r_u x r_v / |.|` points
//! outward for the closed surfaces (sphere, cylinder, torus), which makes
//! the summed principal curvature `M` positive there.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::err::{Error, Result};

use super::chart::{ChartJet, SurfaceChart};

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Flat rectangle `[0, lx] x [0, ly]` in the `z = 0` plane.
pub fn plane(lx: f64, ly: f64) -> Result<SurfaceChart> {
    let lx = positive("plane lx", lx)?;
    let ly = positive("plane ly", ly)?;
    let zero = Vector3::zeros();
    Ok(SurfaceChart::analytic(
        format!("plane(lx={lx}, ly={ly})"),
        [[0.0, lx], [0.0, ly]],
        [false, false],
        Arc::new(|u, v| Vector3::new(u, v, 0.0)),
        Arc::new(move |u, v| ChartJet {
            x: Vector3::new(u, v, 0.0),
            xu: Vector3::new(1.0, 0.0, 0.0),
            xv: Vector3::new(0.0, 1.0, 0.0),
            xuu: zero,
            xuv: zero,
            xvv: zero,
        }),
    ))
}

/// Circular cylinder of radius `r` about the z-axis, axial extent
/// `[0, length]`. `u` is the angle (periodic), `v` the axial coordinate.
pub fn cylinder(r: f64, length: f64) -> Result<SurfaceChart> {
    let r = positive("cylinder radius", r)?;
    let length = positive("cylinder length", length)?;
    Ok(SurfaceChart::analytic(
        format!("cylinder(r={r}, l={length})"),
        [[0.0, 2.0 * PI], [0.0, length]],
        [true, false],
        Arc::new(move |u, v| Vector3::new(r * u.cos(), r * u.sin(), v)),
        Arc::new(move |u, v| {
            let (s, c) = u.sin_cos();
            ChartJet {
                x: Vector3::new(r * c, r * s, v),
                xu: Vector3::new(-r * s, r * c, 0.0),
                xv: Vector3::new(0.0, 0.0, 1.0),
                xuu: Vector3::new(-r * c, -r * s, 0.0),
                xuv: Vector3::zeros(),
                xvv: Vector3::zeros(),
            }
        }),
    ))
}

/// Fraction of the colatitude span clipped off each pole of the sphere
/// chart; the polar caps are handled by the grid's zero-flux closure, not
/// by sampling the (degenerate) pole itself.
pub const SPHERE_POLE_CLIP: f64 = 1e-3;

/// Sphere of radius `r` centred at the origin. `u` is the colatitude
/// (clipped slightly away from the poles, where the chart degenerates),
/// `v` the azimuth (periodic).
pub fn sphere(r: f64) -> Result<SurfaceChart> {
    let r = positive("sphere radius", r)?;
    let delta = SPHERE_POLE_CLIP * PI;
    Ok(SurfaceChart::analytic(
        format!("sphere(r={r})"),
        [[delta, PI - delta], [0.0, 2.0 * PI]],
        [false, true],
        Arc::new(move |u, v| {
            Vector3::new(r * u.sin() * v.cos(), r * u.sin() * v.sin(), r * u.cos())
        }),
        Arc::new(move |u, v| {
            let (su, cu) = u.sin_cos();
            let (sv, cv) = v.sin_cos();
            ChartJet {
                x: Vector3::new(r * su * cv, r * su * sv, r * cu),
                xu: Vector3::new(r * cu * cv, r * cu * sv, -r * su),
                xv: Vector3::new(-r * su * sv, r * su * cv, 0.0),
                xuu: Vector3::new(-r * su * cv, -r * su * sv, -r * cu),
                xuv: Vector3::new(-r * cu * sv, r * cu * cv, 0.0),
                xvv: Vector3::new(-r * su * cv, -r * su * sv, 0.0),
            }
        }),
    ))
}

/// Torus with tube radius `minor` about a circle of radius `major` in the
/// `z = 0` plane. `u` runs around the big circle, `v` around the tube;
/// both periodic. Requires `major > minor` (no self-intersection).
pub fn torus(major: f64, minor: f64) -> Result<SurfaceChart> {
    let big = positive("torus major radius", major)?;
    let small = positive("torus minor radius", minor)?;
    if small >= big {
        return Err(Error::Config(format!(
            "torus needs minor < major, got {small} >= {big}"
        )));
    }
    Ok(SurfaceChart::analytic(
        format!("torus(major={big}, minor={small})"),
        [[0.0, 2.0 * PI], [0.0, 2.0 * PI]],
        [true, true],
        Arc::new(move |u, v| {
            let w = big + small * v.cos();
            Vector3::new(w * u.cos(), w * u.sin(), small * v.sin())
        }),
        Arc::new(move |u, v| {
            let (su, cu) = u.sin_cos();
            let (sv, cv) = v.sin_cos();
            let w = big + small * cv;
            ChartJet {
                x: Vector3::new(w * cu, w * su, small * sv),
                xu: Vector3::new(-w * su, w * cu, 0.0),
                xv: Vector3::new(-small * sv * cu, -small * sv * su, small * cv),
                xuu: Vector3::new(-w * cu, -w * su, 0.0),
                xuv: Vector3::new(small * sv * su, -small * sv * cu, 0.0),
                xvv: Vector3::new(-small * cv * cu, -small * cv * su, -small * sv),
            }
        }),
    ))
}

/// Catenoid with waist radius `a`, parametrized by angle `u` (periodic)
/// and axial parameter `v` in `[-v_max, v_max]`. A minimal surface:
/// `M = 0` everywhere.
pub fn catenoid(a: f64, v_max: f64) -> Result<SurfaceChart> {
    let a = positive("catenoid scale", a)?;
    let v_max = positive("catenoid v_max", v_max)?;
    Ok(SurfaceChart::analytic(
        format!("catenoid(a={a}, v_max={v_max})"),
        [[0.0, 2.0 * PI], [-v_max, v_max]],
        [true, false],
        Arc::new(move |u, v| {
            let ch = v.cosh();
            Vector3::new(a * ch * u.cos(), a * ch * u.sin(), a * v)
        }),
        Arc::new(move |u, v| {
            let (su, cu) = u.sin_cos();
            let ch = v.cosh();
            let sh = v.sinh();
            ChartJet {
                x: Vector3::new(a * ch * cu, a * ch * su, a * v),
                xu: Vector3::new(-a * ch * su, a * ch * cu, 0.0),
                xv: Vector3::new(a * sh * cu, a * sh * su, a),
                xuu: Vector3::new(-a * ch * cu, -a * ch * su, 0.0),
                xuv: Vector3::new(-a * sh * su, a * sh * cu, 0.0),
                xvv: Vector3::new(a * ch * cu, a * ch * su, 0.0),
            }
        }),
    ))
}

/// Helicoid with pitch parameter `a`: one full turn of the ruled surface
/// `(v cos u, v sin u, a u)`, `u` in `[0, 2 pi]` (not periodic in the
/// ambient space), `v` in `[-v_max, v_max]`. Also minimal: `M = 0`.
pub fn helicoid(a: f64, v_max: f64) -> Result<SurfaceChart> {
    let a = positive("helicoid pitch", a)?;
    let v_max = positive("helicoid v_max", v_max)?;
    Ok(SurfaceChart::analytic(
        format!("helicoid(a={a}, v_max={v_max})"),
        [[0.0, 2.0 * PI], [-v_max, v_max]],
        [false, false],
        Arc::new(move |u, v| Vector3::new(v * u.cos(), v * u.sin(), a * u)),
        Arc::new(move |u, v| {
            let (su, cu) = u.sin_cos();
            ChartJet {
                x: Vector3::new(v * cu, v * su, a * u),
                xu: Vector3::new(-v * su, v * cu, a),
                xv: Vector3::new(cu, su, 0.0),
                xuu: Vector3::new(-v * cu, -v * su, 0.0),
                xuv: Vector3::new(-su, cu, 0.0),
                xvv: Vector3::zeros(),
            }
        }),
    ))
}
