//! Vector potential sources, gauge behaviour and the surface
//! decomposition, against closed forms.
//!
//! The loop value below is the exact elliptic-integral potential of a
//! circular loop (radius 1, unit current, field point rho = 0.5,
//! z = 0.3), evaluated independently to 30 digits and frozen.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use std::sync::Arc;

use nalgebra::Vector3;
use thinwall::em::{
    biot_savart_potential, curl_difference, decompose_on_surface, gauge_transform,
    gauss_legendre, loop_potential, lorentz_residual, reconstruct, solenoid_potential,
    CurrentSource, GaugeFunction, VectorPotentialField, PROBE_DELTA,
};
use thinwall::geometry::{plane, sample_geometry, sphere, torus};

#[test]
fn wire_potential_matches_closed_form() {
    let field =
        VectorPotentialField::wire(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0), 1.3).unwrap();
    let a = field.a(&Vector3::new(0.5, 0.4, 7.0));
    // -2 I ln rho along the axis, rho = sqrt(0.41).
    assert_relative_eq!(a.z, 1.1590775550689186, max_relative = 1e-14);
    assert_abs_diff_eq!(a.x, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(a.y, 0.0, epsilon = 1e-15);
}

#[test]
fn loop_potential_matches_elliptic_integral() {
    let field =
        loop_potential(Vector3::zeros(), 1.0, Vector3::new(0.0, 0.0, 1.0), 1.0, 256, 8).unwrap();
    let a = field.a(&Vector3::new(0.5, 0.0, 0.3));
    // Azimuthal by symmetry; the polygon error is O((2 pi / 256)^2).
    assert_relative_eq!(a.y, 1.4474704882721147, max_relative = 5e-4);
    assert_abs_diff_eq!(a.x, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a.z, 0.0, epsilon = 1e-12);

    // On the axis the azimuthal contributions cancel exactly.
    let on_axis = field.a(&Vector3::new(0.0, 0.0, 0.8));
    assert_abs_diff_eq!(on_axis.norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn quadrature_is_exact_on_polynomials() {
    let (nodes, weights) = gauss_legendre(5);
    let integrate = |k: u32| -> f64 {
        nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(k as i32)).sum()
    };
    assert_relative_eq!(integrate(0), 2.0, max_relative = 1e-14);
    assert_abs_diff_eq!(integrate(1), 0.0, epsilon = 1e-14);
    // Degree 8 <= 2n - 1 = 9 is still exact: integral 2/9.
    assert_relative_eq!(integrate(8), 2.0 / 9.0, max_relative = 1e-12);
}

#[test]
fn decomposition_reconstructs_the_ambient_vector() {
    let chart = torus(2.0, 1.0).unwrap();
    let fields = [
        VectorPotentialField::uniform(Vector3::new(0.3, -0.2, 0.9)),
        VectorPotentialField::wire(Vector3::new(0.0, 0.0, -3.0), Vector3::x(), 0.7).unwrap(),
        VectorPotentialField::azimuthal(0.4),
        loop_potential(Vector3::new(0.3, -0.2, 1.9), 0.6, Vector3::z(), 1.0, 32, 4).unwrap(),
    ];
    for field in &fields {
        for i in 0..7 {
            let s = sample_geometry(&chart, 0.83 * i as f64, 0.59 * i as f64 + 0.2).unwrap();
            let sf = decompose_on_surface(field, &s, PROBE_DELTA).unwrap();
            let rebuilt = reconstruct(&s, &sf);
            let a = field.a(&s.position);
            assert_relative_eq!(rebuilt, a, epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(sf.a_sq, a.dot(&a), epsilon = 1e-13, max_relative = 1e-13);
            // Covariant and contravariant components are metric-related.
            let back = s.metric * sf.a_con;
            assert_relative_eq!(back[0], sf.a_cov[0], epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(back[1], sf.a_cov[1], epsilon = 1e-12, max_relative = 1e-12);
        }
    }
}

#[test]
fn analytic_presets_are_divergence_free() {
    let probes: Vec<Vector3<f64>> = (0..12)
        .map(|i| {
            let t = i as f64;
            Vector3::new(1.1 + 0.13 * t, -0.4 + 0.21 * t, 0.5 + 0.17 * t)
        })
        .collect();
    let fields = [
        VectorPotentialField::uniform(Vector3::new(0.3, -0.2, 0.9)),
        VectorPotentialField::wire(Vector3::zeros(), Vector3::z(), 1.3).unwrap(),
        VectorPotentialField::azimuthal(0.4),
        loop_potential(Vector3::zeros(), 0.5, Vector3::z(), 2.0, 64, 6).unwrap(),
        solenoid_potential(Vector3::zeros(), Vector3::z(), 0.4, 0.8, 5, 1.0, 32, 4).unwrap(),
    ];
    for field in &fields {
        let r = lorentz_residual(field, &probes, PROBE_DELTA);
        assert!(r <= 1e-6, "{}: |div A| = {r:.3e}", field.label);
    }
}

#[test]
fn gauge_transform_preserves_the_curl() {
    let base = loop_potential(Vector3::zeros(), 0.5, Vector3::z(), 2.0, 64, 6).unwrap();
    let probes: Vec<Vector3<f64>> =
        (0..10).map(|i| Vector3::new(0.9 + 0.1 * i as f64, 0.3, -0.2)).collect();

    for gauge in [
        GaugeFunction::linear(Vector3::new(0.4, -1.1, 0.3)),
        GaugeFunction::quadratic(Vector3::new(0.5, 0.2, -0.7)),
        GaugeFunction::new("cubic", Arc::new(|x: &Vector3<f64>| 0.1 * x.x * x.x * x.y)),
    ] {
        let transformed = gauge_transform(&base, &gauge, 1e-4);
        let diff = curl_difference(&base, &transformed, &probes, 1e-4);
        assert!(diff <= 5e-7, "{}: curl changed by {diff:.3e}", gauge.label);
    }
}

#[test]
fn fd_gradient_matches_analytic_gradient() {
    let lin = GaugeFunction::linear(Vector3::new(0.4, -1.1, 0.3));
    let fd = GaugeFunction::new("same", Arc::new(|x: &Vector3<f64>| 0.4 * x.x - 1.1 * x.y + 0.3 * x.z));
    let p = Vector3::new(0.7, -0.4, 1.1);
    let ga = lin.gradient(&p, 1e-4);
    let gf = fd.gradient(&p, 1e-4);
    assert_relative_eq!(ga, gf, epsilon = 1e-10, max_relative = 1e-10);
}

#[test]
fn normal_derivative_probe_sees_the_radial_gradient() {
    // A = (0, 0, z): on a sphere, A3 = z cos(theta) and along the fixed
    // outward normal dA3/dx3 = cos^2(theta).
    let chart = sphere(1.0).unwrap();
    let field = VectorPotentialField::new(
        "axial-linear",
        Arc::new(|x: &Vector3<f64>| Vector3::new(0.0, 0.0, x.z)),
    );
    for i in 1..8 {
        let u = 0.4 * i as f64 * 0.7;
        let s = sample_geometry(&chart, u, 1.3).unwrap();
        let sf = decompose_on_surface(&field, &s, PROBE_DELTA).unwrap();
        let cos_t = u.cos();
        assert_relative_eq!(sf.a3, cos_t * cos_t, epsilon = 1e-10, max_relative = 1e-10);
        assert_relative_eq!(
            sf.da3_dx3,
            cos_t * cos_t,
            epsilon = 1e-8,
            max_relative = 1e-8
        );
        // div(0,0,z) = 1 everywhere.
        assert_relative_eq!(sf.div3, 1.0, epsilon = 1e-9, max_relative = 1e-9);
    }
}

#[test]
fn evaluation_on_the_source_is_reported() {
    // A straight segment in the plane z = 0, evaluated exactly at one of
    // its order-2 quadrature nodes (mid + half * (-1/sqrt 3)).
    let src = CurrentSource {
        points: vec![Vector3::new(0.0, 0.5, 0.0), Vector3::new(2.0, 0.5, 0.0)],
        current: 1.0,
        closed: false,
    };
    let field = biot_savart_potential(vec![src], 2).unwrap();
    let chart = plane(2.0, 2.0).unwrap();
    let u = 1.0 - 0.5773502691896257;
    let s = sample_geometry(&chart, u, 0.5).unwrap();
    let err = decompose_on_surface(&field, &s, PROBE_DELTA).unwrap_err();
    assert!(matches!(err, thinwall::Error::SourceOnSurface(_)), "got {err:?}");
}

#[test]
fn source_and_field_constructors_reject_bad_input() {
    assert!(VectorPotentialField::wire(Vector3::zeros(), Vector3::zeros(), 1.0).is_err());
    assert!(CurrentSource::circular_loop(Vector3::zeros(), 0.0, Vector3::z(), 1.0, 16).is_err());
    assert!(CurrentSource::circular_loop(Vector3::zeros(), 1.0, Vector3::z(), 1.0, 4).is_err());
    assert!(CurrentSource::circular_loop(Vector3::zeros(), 1.0, Vector3::zeros(), 1.0, 16).is_err());
    assert!(biot_savart_potential(vec![], 8).is_err());
    let src = CurrentSource::circular_loop(Vector3::zeros(), 1.0, Vector3::z(), 1.0, 16).unwrap();
    assert!(biot_savart_potential(vec![src.clone()], 1).is_err());
    assert!(biot_savart_potential(vec![src], 65).is_err());
    assert!(solenoid_potential(Vector3::zeros(), Vector3::z(), 0.4, 0.0, 5, 1.0, 32, 4).is_err());
}

#[test]
fn superpose_and_scale_are_pointwise() {
    let a = VectorPotentialField::uniform(Vector3::new(1.0, 0.0, 0.0));
    let b = VectorPotentialField::azimuthal(0.5);
    let p = Vector3::new(0.6, -0.8, 0.2);
    let sum = a.clone().superpose(b.clone());
    assert_relative_eq!(sum.a(&p), a.a(&p) + b.a(&p), max_relative = 1e-15);
    let scaled = b.scaled(-2.5);
    assert_relative_eq!(scaled.a(&p), b.a(&p) * -2.5, max_relative = 1e-15);
}
