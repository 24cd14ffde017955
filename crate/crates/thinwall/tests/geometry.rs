//! Geometry layer against hand-checked closed forms.
//!
//! The numeric constants below were computed symbolically (exact
//! parametrization derivatives, then evaluated to 22 digits) and frozen;
//! they are not regression snapshots of this crate's own output.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use thinwall::geometry::{
    catenoid, cylinder, egregium_check, geometric_potential, helicoid, offset_metric, plane,
    sample_geometry, sphere, torus, xi_factor, GeometrySample, SurfaceChart, SPHERE_POLE_CLIP,
};

fn sample(chart: &SurfaceChart, u: f64, v: f64) -> GeometrySample {
    sample_geometry(chart, u, v).expect("interior point must be regular")
}

#[test]
fn torus_forms_and_curvatures_match_closed_form() {
    let chart = torus(2.0, 1.0).unwrap();
    let s = sample(&chart, 0.7, 1.1);

    assert_relative_eq!(s.metric[(0, 0)], 6.020133927074637, max_relative = 1e-14);
    assert_abs_diff_eq!(s.metric[(0, 1)], 0.0, epsilon = 1e-14);
    assert_relative_eq!(s.metric[(1, 1)], 1.0, max_relative = 1e-14);
    assert_relative_eq!(s.det_g, 6.020133927074637, max_relative = 1e-14);

    let n = Vector3::new(0.34692944965489901, 0.29221464428477235, 0.89120736006143534);
    assert_relative_eq!(s.normal, n, max_relative = 1e-13);

    assert_relative_eq!(s.shape[(0, 0)], 1.1129416842234819, max_relative = 1e-13);
    assert_abs_diff_eq!(s.shape[(0, 1)], 0.0, epsilon = 1e-14);
    assert_relative_eq!(s.shape[(1, 1)], 1.0, max_relative = 1e-13);

    assert_relative_eq!(s.mean_curv, 1.1848699211188967, max_relative = 1e-13);
    assert_relative_eq!(s.gauss_curv, 0.18486992111889670, max_relative = 1e-12);
}

#[test]
fn sphere_forms_and_curvatures_match_closed_form() {
    let chart = sphere(1.5).unwrap();
    let s = sample(&chart, 0.8, 1.05);

    assert_relative_eq!(s.metric[(0, 0)], 2.25, max_relative = 1e-14);
    assert_relative_eq!(s.metric[(1, 1)], 1.1578494625889498, max_relative = 1e-14);
    assert_relative_eq!(s.det_g, 2.6051612908251371, max_relative = 1e-14);

    // Outward normal: radially out, position / r.
    let n = Vector3::new(0.35693562186038850, 0.62225133426757882, 0.69670670934716542);
    assert_relative_eq!(s.normal, n, max_relative = 1e-13);
    assert_relative_eq!(s.normal, s.position / 1.5, max_relative = 1e-13);

    assert_relative_eq!(s.shape[(0, 0)], 1.5, max_relative = 1e-13);
    assert_relative_eq!(s.shape[(1, 1)], 0.77189964172596654, max_relative = 1e-13);
    assert_relative_eq!(s.mean_curv, 2.0 / 1.5, max_relative = 1e-13);
    assert_relative_eq!(s.gauss_curv, 4.0 / 9.0, max_relative = 1e-13);
}

#[test]
fn cylinder_and_plane_curvatures() {
    let chart = cylinder(0.8, 1.0).unwrap();
    let s = sample(&chart, 2.5, 0.3);
    assert_relative_eq!(s.metric[(0, 0)], 0.64, max_relative = 1e-14);
    let n = Vector3::new(-0.80114361554693371, 0.59847214410395649, 0.0);
    assert_relative_eq!(s.normal, n, max_relative = 1e-13);
    assert_relative_eq!(s.shape[(0, 0)], 0.8, max_relative = 1e-13);
    assert_relative_eq!(s.mean_curv, 1.25, max_relative = 1e-13);
    assert_abs_diff_eq!(s.gauss_curv, 0.0, epsilon = 1e-14);

    let flat = plane(2.0, 1.0).unwrap();
    let s = sample(&flat, 1.2, 0.4);
    assert_abs_diff_eq!(s.mean_curv, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(s.gauss_curv, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(geometric_potential(&s, 1.0), 0.0, epsilon = 1e-15);
}

#[test]
fn minimal_surfaces_have_zero_summed_curvature() {
    let cat = catenoid(1.0, 1.0).unwrap();
    let s = sample(&cat, 0.9, -0.4);
    assert_abs_diff_eq!(s.mean_curv, 0.0, epsilon = 1e-13);
    assert_relative_eq!(s.gauss_curv, -0.73211773224647137, max_relative = 1e-12);
    assert_relative_eq!(s.det_g, 1.3659005320517829, max_relative = 1e-14);
    let n = Vector3::new(0.57499385282926456, 0.72458322868372805, 0.37994896225522489);
    assert_relative_eq!(s.normal, n, max_relative = 1e-13);

    let hel = helicoid(0.7, 1.5).unwrap();
    let s = sample(&hel, 1.3, 0.6);
    assert_abs_diff_eq!(s.mean_curv, 0.0, epsilon = 1e-13);
    assert_relative_eq!(s.gauss_curv, -0.67820069204152249, max_relative = 1e-12);
    assert_relative_eq!(s.shape[(0, 1)], -0.75925660236529660, max_relative = 1e-13);
    assert_abs_diff_eq!(s.shape[(0, 0)], 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.shape[(1, 1)], 0.0, epsilon = 1e-14);

    // Minimal surface => V0 = -K_gauss-free part only: V0 = K/(2m) is wrong;
    // V0 = -((M/2)^2 - K)/(2m) = K/(2m) < 0 since K < 0 here.
    assert!(geometric_potential(&s, 1.0) < 0.0);
}

#[test]
fn xi_and_offset_metric_match_closed_form() {
    let chart = torus(2.0, 1.0).unwrap();
    let s = sample(&chart, 0.7, 1.1);
    assert_relative_eq!(xi_factor(&s, 0.05), 0.94121867874685241, max_relative = 1e-13);
    let g5 = offset_metric(&s, 0.05);
    assert_relative_eq!(g5[(0, 0)], 5.9093541322557193, max_relative = 1e-13);
    assert_relative_eq!(g5[(1, 1)], 0.9025, max_relative = 1e-13);
    assert_abs_diff_eq!(g5[(0, 1)], 0.0, epsilon = 1e-13);

    let chart = sphere(1.5).unwrap();
    let s = sample(&chart, 0.8, 1.05);
    // (1 - x3/r)^2 on a sphere: (29/30)^2.
    assert_relative_eq!(xi_factor(&s, 0.05), 841.0 / 900.0, max_relative = 1e-13);
    let g5 = offset_metric(&s, 0.05);
    assert_relative_eq!(g5[(0, 0)], 2.1025, max_relative = 1e-13);
    assert_relative_eq!(g5[(1, 1)], 1.0819459978192298, max_relative = 1e-13);

    let chart = catenoid(1.0, 1.0).unwrap();
    let s = sample(&chart, 0.9, -0.4);
    assert_relative_eq!(xi_factor(&s, 0.05), 0.99816970566938382, max_relative = 1e-13);
    let g5 = offset_metric(&s, 0.05);
    assert_relative_eq!(g5[(0, 0)], 1.0708565701176252, max_relative = 1e-13);
    assert_relative_eq!(g5[(1, 1)], 1.2708565701176252, max_relative = 1e-13);
}

/// `xi(x3)^2 * det g == det G(x3)` is an algebraic identity of the
/// quadratic forms, so it must hold to roundoff, not just to O(x3^3).
#[test]
fn xi_squared_equals_offset_determinant_ratio() {
    let charts = [
        torus(2.0, 1.0).unwrap(),
        sphere(1.0).unwrap(),
        catenoid(1.0, 1.2).unwrap(),
        helicoid(0.7, 1.5).unwrap(),
        cylinder(0.8, 2.0).unwrap(),
    ];
    for chart in &charts {
        for i in 0..5 {
            let u = chart.domain[0][0] + chart.span(0) * (0.13 + 0.17 * i as f64);
            let v = chart.domain[1][0] + chart.span(1) * (0.71 - 0.11 * i as f64);
            let s = sample(chart, u, v);
            for &x3 in &[-0.08, -0.01, 0.02, 0.05] {
                let lhs = xi_factor(&s, x3).powi(2) * s.det_g;
                let rhs = offset_metric(&s, x3).determinant();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }
}

#[test]
fn geometric_potential_signs_and_values() {
    // Sphere: umbilic, V0 == 0 at every sampled node.
    let chart = sphere(2.5).unwrap();
    for i in 0..8 {
        let u = chart.domain[0][0] + chart.span(0) * (0.05 + 0.12 * i as f64);
        let s = sample(&chart, u, 1.0 + 0.3 * i as f64);
        assert_abs_diff_eq!(geometric_potential(&s, 1.3), 0.0, epsilon = 1e-14);
    }

    // Cylinder: -1/(8 m r^2), independent of position.
    let r = 0.8;
    let mass = 1.7;
    let chart = cylinder(r, 2.0).unwrap();
    let s = sample(&chart, 1.0, 0.5);
    assert_relative_eq!(
        geometric_potential(&s, mass),
        -1.0 / (8.0 * mass * r * r),
        max_relative = 1e-13
    );

    // Never positive anywhere on a torus sweep.
    let chart = torus(2.0, 1.0).unwrap();
    for i in 0..20 {
        for j in 0..20 {
            let s = sample(&chart, 0.3141 * i as f64, 0.3141 * j as f64);
            assert!(geometric_potential(&s, 1.0) <= 1e-15);
        }
    }
}

#[test]
fn torus_summed_curvature_range() {
    // (R + 2 r cos v) / (r (R + r cos v)) for R=2, r=1: range [0, 4/3].
    let chart = torus(2.0, 1.0).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..720 {
        let v = 2.0 * PI * j as f64 / 720.0;
        let s = sample(&chart, 0.4, v);
        lo = lo.min(s.mean_curv);
        hi = hi.max(s.mean_curv);
    }
    assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-6);
    assert_relative_eq!(hi, 4.0 / 3.0, max_relative = 1e-6);
}

#[test]
fn egregium_agreement_analytic_and_fd() {
    let cases = [
        (torus(2.0, 1.0).unwrap(), 0.7, 1.1),
        (sphere(1.5).unwrap(), 0.8, 1.05),
        (catenoid(1.0, 1.2).unwrap(), 0.9, -0.4),
        (helicoid(0.7, 1.5).unwrap(), 1.3, 0.6),
    ];
    for (chart, u, v) in &cases {
        let c = egregium_check(chart, *u, *v).unwrap();
        let scale = c.extrinsic.abs().max(1.0);
        assert!(
            c.defect <= 1e-6 * scale,
            "{}: analytic defect {} at ({u}, {v})",
            chart.label,
            c.defect
        );

        let fd = chart.clone().with_fd_derivatives();
        assert!(!fd.has_analytic_jet());
        let c = egregium_check(&fd, *u, *v).unwrap();
        assert!(
            c.defect <= 1e-3 * scale,
            "{}: fd defect {} at ({u}, {v})",
            chart.label,
            c.defect
        );
    }
}

#[test]
fn fd_jets_track_analytic_jets() {
    let chart = torus(2.0, 1.0).unwrap();
    let fd = chart.clone().with_fd_derivatives();
    for i in 0..6 {
        let (u, v) = (0.9 * i as f64, 0.37 + 0.7 * i as f64);
        let a = chart.jet(u, v).unwrap();
        let b = fd.jet(u, v).unwrap();
        assert_relative_eq!(a.x, b.x, max_relative = 1e-14);
        assert_relative_eq!(a.xu, b.xu, epsilon = 1e-7, max_relative = 1e-7);
        assert_relative_eq!(a.xuu, b.xuu, epsilon = 1e-5, max_relative = 1e-5);
        assert_relative_eq!(a.xuv, b.xuv, epsilon = 1e-5, max_relative = 1e-5);
    }
}

#[test]
fn degenerate_chart_is_reported() {
    // r(u, v) = (u + v, u + v, 0): r_u parallel to r_v everywhere.
    let bad = SurfaceChart::from_position(
        "collapsed",
        [[0.0, 1.0], [0.0, 1.0]],
        [false, false],
        Arc::new(|u, v| Vector3::new(u + v, u + v, 0.0)),
    );
    let err = sample_geometry(&bad, 0.5, 0.5).unwrap_err();
    assert!(matches!(err, thinwall::Error::DegenerateChart { .. }));
}

#[test]
fn preset_domains_and_periodicity() {
    let s = sphere(1.0).unwrap();
    assert_eq!(s.periodic, [false, true]);
    let clip = SPHERE_POLE_CLIP * PI;
    assert_relative_eq!(s.domain[0][0], clip, max_relative = 1e-15);
    assert_relative_eq!(s.domain[0][1], PI - clip, max_relative = 1e-15);

    assert_eq!(torus(2.0, 1.0).unwrap().periodic, [true, true]);
    assert_eq!(cylinder(1.0, 1.0).unwrap().periodic, [true, false]);
    assert_eq!(catenoid(1.0, 1.0).unwrap().periodic, [true, false]);
    assert_eq!(helicoid(1.0, 1.0).unwrap().periodic, [false, false]);
    assert_eq!(plane(1.0, 1.0).unwrap().periodic, [false, false]);

    assert!(torus(1.0, 1.0).is_err(), "self-intersecting torus must be rejected");
    assert!(sphere(-1.0).is_err());
    assert!(cylinder(0.0, 1.0).is_err());
}
