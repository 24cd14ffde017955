//! Separability measurement, variant comparison and the spectral
//! derivative probe.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use num_complex::Complex64 as C;

use nalgebra::Vector3;
use thinwall::assembly::{
    assemble_naive, assemble_slab, assemble_variational, BoundaryCondition, Confinement,
    EdgeRule, ParticleParams, SlabGrid, SurfaceGrid,
};
use thinwall::analysis::{compare_variants, field_derivative_probe, schmidt_spectrum};
use thinwall::assembly::anomalous_delta;
use thinwall::em::VectorPotentialField;
use thinwall::geometry::{cylinder, sphere};
use thinwall::solve::{solve_lowest, SolverConfig};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn cylinder_slab() -> SlabGrid {
    let chart = cylinder(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 10, 6, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    SlabGrid::build(grid, 0.05, 6).unwrap()
}

#[test]
fn manufactured_product_state_is_rank_one() {
    let slab = cylinder_slab();
    let ns = slab.surface.len();
    let n3 = slab.n3;
    let mut state = vec![c(0.0, 0.0); ns * n3];
    for s in 0..ns {
        let f = c((0.3 * s as f64).cos(), (0.11 * s as f64).sin());
        for k in 0..n3 {
            let g = c(1.0 + 0.2 * k as f64, -0.4 * k as f64);
            state[slab.idx(s, k)] = f * g;
        }
    }
    let rep = schmidt_spectrum(&state, &slab, 4).unwrap();
    assert!(
        rep.separability_index <= 1e-10,
        "product state measured at {:.3e}",
        rep.separability_index
    );
    assert_eq!(rep.singular_values.len(), 4);
    assert!(rep.singular_values[0] > 0.0);
}

#[test]
fn rank_two_index_matches_the_weighted_construction() {
    // Two product terms with disjoint supports stay orthogonal under the
    // diagonal weighting, so the singular values can be assembled by hand.
    let slab = cylinder_slab();
    let ns = slab.surface.len();
    let n3 = slab.n3;
    let half_s = ns / 2;
    let half_k = n3 / 2;
    let t3 = slab.transverse_weights();
    let sw = &slab.surface.weights;

    let ratio = 0.37;
    let mut state = vec![c(0.0, 0.0); ns * n3];
    for s in 0..half_s {
        for k in 0..half_k {
            state[slab.idx(s, k)] = c(1.0, 0.5);
        }
    }
    for s in half_s..ns {
        for k in half_k..n3 {
            state[slab.idx(s, k)] = c(0.0, ratio);
        }
    }
    let block = |sr: std::ops::Range<usize>, kr: std::ops::Range<usize>, amp: f64| -> f64 {
        let su: f64 = sr.map(|s| sw[s]).sum();
        let ku: f64 = kr.map(|k| t3[k]).sum();
        amp * (su * ku).sqrt()
    };
    let s1 = block(0..half_s, 0..half_k, c(1.0, 0.5).norm());
    let s2 = block(half_s..ns, half_k..n3, ratio);
    let (hi, lo) = if s1 >= s2 { (s1, s2) } else { (s2, s1) };

    let rep = schmidt_spectrum(&state, &slab, 3).unwrap();
    assert_relative_eq!(rep.singular_values[0], hi, max_relative = 1e-10);
    assert_relative_eq!(rep.singular_values[1], lo, max_relative = 1e-10);
    assert_relative_eq!(rep.separability_index, lo / hi, max_relative = 1e-10);
}

#[test]
fn schmidt_index_is_phase_invariant() {
    let slab = cylinder_slab();
    let ns = slab.surface.len();
    let n3 = slab.n3;
    let mut state = vec![c(0.0, 0.0); ns * n3];
    for s in 0..ns {
        for k in 0..n3 {
            state[slab.idx(s, k)] =
                c((0.2 * s as f64 + 0.1 * k as f64).cos(), (0.05 * s as f64 * k as f64).sin());
        }
    }
    let base = schmidt_spectrum(&state, &slab, 3).unwrap();
    let phase = c(0.0, 0.83).exp();
    let rotated: Vec<C> = state.iter().map(|z| z * phase).collect();
    let rot = schmidt_spectrum(&rotated, &slab, 3).unwrap();
    assert_abs_diff_eq!(
        base.separability_index,
        rot.separability_index,
        epsilon = 1e-12
    );
    // Scaling the state must not move the ratio either.
    let scaled: Vec<C> = state.iter().map(|z| z * 7.3).collect();
    let sc = schmidt_spectrum(&scaled, &slab, 3).unwrap();
    assert_abs_diff_eq!(base.separability_index, sc.separability_index, epsilon = 1e-12);
}

#[test]
fn schmidt_input_is_validated() {
    let slab = cylinder_slab();
    let wrong = vec![c(1.0, 0.0); slab.len() + 1];
    assert!(schmidt_spectrum(&wrong, &slab, 3).is_err());
    let zero = vec![c(0.0, 0.0); slab.len()];
    assert!(schmidt_spectrum(&zero, &slab, 3).is_err());
    let fine = vec![c(1.0, 0.0); slab.len()];
    assert!(schmidt_spectrum(&fine, &slab, 0).is_err());
}

/// The frozen dense-oracle fixture: the cylinder Dirichlet ground state
/// is the separable baseline, and the iterative path must land on the
/// same answer.
#[test]
fn cylinder_dirichlet_ground_is_separable() {
    let fixture: serde_json::Value = serde_json::from_str(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/separability.json"
    )))
    .unwrap();
    let cyl = fixture["surfaces"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "cylinder")
        .unwrap();
    let n = &cyl["grid"];
    let (nu, nv) = (n[0].as_u64().unwrap() as usize, n[1].as_u64().unwrap() as usize);
    let eps = fixture["eps"].as_f64().unwrap();
    let n3 = fixture["n3"].as_u64().unwrap() as usize;
    let shift = cyl["dirichlet"]["shift"].as_f64().unwrap();

    let chart = cylinder(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, nu, nv, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let slab = SlabGrid::build(grid, eps, n3).unwrap();
    let op = assemble_slab(
        &slab,
        ParticleParams::default(),
        None,
        BoundaryCondition::Dirichlet,
        Confinement::None,
    )
    .unwrap();
    let config = SolverConfig { k: 1, shift: c(shift, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();

    let rep = schmidt_spectrum(&r.eigenvectors[0], &slab, 4).unwrap();
    assert!(
        rep.separability_index <= 1e-6,
        "cylinder Dirichlet ground index {:.3e}",
        rep.separability_index
    );

    // And it agrees with the frozen dense value.
    let frozen = cyl["dirichlet"]["eigenvalues"][0].as_f64().unwrap();
    assert_relative_eq!(r.eigenvalues[0].re, frozen, max_relative = 1e-8);
}

#[test]
fn compare_variants_exposes_the_anomalous_term() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 16, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let particle = ParticleParams::new(1.0, 1.0).unwrap();
    let field = VectorPotentialField::uniform(Vector3::new(0.0, 0.0, 1.0));
    let nv_op = assemble_naive(&grid, particle, &field).unwrap();
    let vr_op = assemble_variational(&grid, particle, &field, 1.0).unwrap();
    let config = SolverConfig { k: 6, shift: c(-0.5, 0.0), ..SolverConfig::default() };
    let nv = solve_lowest(&nv_op, &config).unwrap();
    let vr = solve_lowest(&vr_op, &config).unwrap();

    let delta = anomalous_delta(&nv_op, &vr_op).unwrap();
    let report = compare_variants(&nv, &vr).unwrap().with_anomalous_profile(&delta);

    assert!(!report.variational_complex);
    assert!(report.max_im_variational <= 1e-8);
    assert!(report.hermiticity_variational <= 1e-12 * vr_op.scale());
    assert!(report.hermiticity_naive > 1.0, "sphere naive defect is O(1)");
    // Anomalous |diagonal| profile is 2 |cos theta| node by node.
    let profile = report.anomalous_profile.as_ref().unwrap();
    for (p, s) in profile.iter().zip(&grid.samples) {
        assert_abs_diff_eq!(*p, 2.0 * s.position.z.abs(), epsilon = 1e-12);
    }
    assert_eq!(report.rows.len(), 6);

    // Mixed-variant and mixed-grid comparisons are refused.
    assert!(compare_variants(&nv, &nv).is_err());
    let other = SurfaceGrid::build(&chart, 14, 14, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let vr_other_op = assemble_variational(&other, particle, &field, 1.0).unwrap();
    let vr_other = solve_lowest(&vr_other_op, &config).unwrap();
    assert!(compare_variants(&nv, &vr_other).is_err());
}

#[test]
fn ring_flux_derivatives_match_minimal_coupling() {
    // Ring of radius 1: lambda_n(s) = (n - q s)^2 / 2, so the derivative
    // at s0 = 0.3 is q (s0 - n): 0.3, -0.7, 1.3 for n = 0, 1, -1.
    let chart = cylinder(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 128, 1, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let particle = ParticleParams::new(1.0, 1.0).unwrap();
    let assemble =
        |f: &VectorPotentialField| assemble_variational(&grid, particle, f, 1.0);
    let family = |s: f64| VectorPotentialField::azimuthal(s);
    let solver = SolverConfig { shift: c(-0.1, 0.0), ..SolverConfig::default() };

    let d = field_derivative_probe(assemble, family, 0.3, 1e-3, 3, &solver).unwrap();
    let want = [0.3, -0.7, 1.3];
    for (got, want) in d.iter().zip(want) {
        assert_relative_eq!(*got, want, max_relative = 2e-2);
    }

    // At s0 = 0 the +-n levels cross; the probe still tracks them
    // through the crossing (the split spectra at +-ds are consistent)
    // and reads out the equal and opposite moments.
    let d0 = field_derivative_probe(assemble, family, 0.0, 1e-3, 3, &solver).unwrap();
    assert_abs_diff_eq!(d0[0], 0.0, epsilon = 1e-6);
    assert_relative_eq!(d0[1] + d0[2], 0.0, epsilon = 1e-6);
    assert_relative_eq!(d0[1].abs(), 1.0, max_relative = 2e-2);
}
