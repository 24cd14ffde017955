//! Assembled operators against flat-space closed forms and the
//! structural guarantees the rest of the crate leans on.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

use nalgebra::Vector3;
use thinwall::assembly::{
    anomalous_delta, assemble_laplace_beltrami, assemble_naive, assemble_slab,
    assemble_variational, xi_reduction_check, BoundaryCondition, Confinement, EdgeRule,
    ParticleParams, SlabGrid, SurfaceGrid, THIN_WALL_LIMIT,
};
use thinwall::em::VectorPotentialField;
use thinwall::geometry::{catenoid, cylinder, plane, sample_geometry, sphere, torus};
use thinwall::solve::{solve_lowest, SolverConfig};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn neutral() -> ParticleParams {
    ParticleParams::neutral(1.0).unwrap()
}

fn charged() -> ParticleParams {
    ParticleParams::new(1.0, 1.0).unwrap()
}

fn uniform_z() -> VectorPotentialField {
    VectorPotentialField::uniform(Vector3::new(0.0, 0.0, 1.0))
}

#[test]
fn stencil_budget_is_respected() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 14, 14, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let field = uniform_z();
    let lb = assemble_laplace_beltrami(&grid, neutral()).unwrap();
    let nv = assemble_naive(&grid, charged(), &field).unwrap();
    let vr = assemble_variational(&grid, charged(), &field, 1.0).unwrap();
    assert!(lb.matrix.max_row_nnz() <= 5, "LB row nnz {}", lb.matrix.max_row_nnz());
    assert!(nv.matrix.max_row_nnz() <= 5, "naive row nnz {}", nv.matrix.max_row_nnz());
    assert!(vr.matrix.max_row_nnz() <= 5, "variational row nnz {}", vr.matrix.max_row_nnz());

    let slab_grid = SlabGrid::build(grid, 0.05, 6).unwrap();
    let slab = assemble_slab(
        &slab_grid,
        neutral(),
        None,
        BoundaryCondition::Dirichlet,
        Confinement::None,
    )
    .unwrap();
    assert!(slab.matrix.max_row_nnz() <= 7, "slab row nnz {}", slab.matrix.max_row_nnz());

    // A ring uses one active direction only.
    let ring_chart = cylinder(1.0, 1.0).unwrap();
    let ring =
        SurfaceGrid::build(&ring_chart, 64, 1, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let op = assemble_laplace_beltrami(&ring, neutral()).unwrap();
    assert!(op.matrix.max_row_nnz() <= 3);
}

#[test]
fn laplace_beltrami_annihilates_constants() {
    for (chart, edges) in [
        (sphere(1.0).unwrap(), [EdgeRule::ZeroFlux, EdgeRule::Periodic]),
        (torus(2.0, 1.0).unwrap(), [EdgeRule::Periodic, EdgeRule::Periodic]),
    ] {
        let grid = SurfaceGrid::build(&chart, 20, 20, edges).unwrap();
        let op = assemble_laplace_beltrami(&grid, neutral()).unwrap();
        let ones = vec![c(1.0, 0.0); op.dim()];
        let out = op.matrix.apply(&ones);
        let worst = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(
            worst <= 1e-10 * op.scale(),
            "{}: constant not annihilated, max residual {worst:.3e}",
            chart.label
        );
    }
}

#[test]
fn variational_operator_is_hermitian_in_the_measure() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 18, 18, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let op = assemble_variational(&grid, charged(), &uniform_z(), 1.0).unwrap();
    let defect = op.hermiticity_residual();
    assert!(defect <= 1e-12 * op.scale(), "defect {defect:.3e}, scale {:.3e}", op.scale());
}

#[test]
fn naive_hermiticity_defect_is_the_anomalous_diagonal() {
    // Uniform A = z on the unit sphere: A3 = cos(theta), M = 2 and the
    // defect must equal max |(q/m) A3 M| = 2 max|cos(theta)| over nodes.
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 24, 24, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let op = assemble_naive(&grid, charged(), &uniform_z()).unwrap();
    let expected = grid
        .samples
        .iter()
        .map(|s| 2.0 * s.position.z.abs())
        .fold(0.0, f64::max);
    assert_relative_eq!(op.hermiticity_residual(), expected, epsilon = 1e-10, max_relative = 1e-9);
}

#[test]
fn neutral_naive_and_variational_coincide() {
    let chart = torus(2.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 16, [EdgeRule::Periodic, EdgeRule::Periodic]).unwrap();
    let field = uniform_z();
    let nv = assemble_naive(&grid, neutral(), &field).unwrap();
    let vr = assemble_variational(&grid, neutral(), &field, 1.0).unwrap();
    assert_eq!(nv.matrix.indptr, vr.matrix.indptr);
    assert_eq!(nv.matrix.indices, vr.matrix.indices);
    let scale = nv.scale();
    for (a, b) in nv.matrix.data.iter().zip(&vr.matrix.data) {
        assert!((a - b).norm() <= 1e-15 * scale);
    }
    let delta = anomalous_delta(&nv, &vr).unwrap();
    assert_eq!(delta.matrix.nnz(), 0, "neutral anomalous delta must vanish identically");
}

#[test]
fn anomalous_delta_is_the_curvature_normal_diagonal() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 20, 20, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let field = uniform_z();
    let nv = assemble_naive(&grid, charged(), &field).unwrap();
    let vr = assemble_variational(&grid, charged(), &field, 1.0).unwrap();
    let delta = anomalous_delta(&nv, &vr).unwrap();
    let scale = nv.scale();

    for (i, s) in grid.samples.iter().enumerate() {
        let d = delta.matrix.get(i, i);
        // -(i q / m) A3 M with A3 = cos(theta) = z, M = 2.
        let want = c(0.0, -2.0 * s.position.z);
        assert!(
            (d - want).norm() <= 1e-13 * scale,
            "node {i}: delta {d}, closed form {want}"
        );
    }
    // Off-diagonal part empty: nnz equals the number of nonzero diagonals.
    let nonzero_nodes =
        grid.samples.iter().filter(|s| s.position.z.abs() > 0.0).count();
    assert_eq!(delta.matrix.nnz(), nonzero_nodes);

    // A minimal surface kills the term through M = 0 up to roundoff.
    let chart = catenoid(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 12, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let nv = assemble_naive(&grid, charged(), &field).unwrap();
    let vr = assemble_variational(&grid, charged(), &field, 1.0).unwrap();
    let delta = anomalous_delta(&nv, &vr).unwrap();
    assert!(delta.matrix.max_abs() <= 1e-13 * nv.scale());
}

#[test]
fn flat_rectangle_dirichlet_ground_state() {
    // Box [0, pi]^2 with hard walls: continuum ground 1.0; on the uniform
    // interior grid the lowest FD eigenvalue is exactly
    // 2 (1 - cos h) / h^2 with h = pi / (n + 1).
    let n = 24;
    let chart = plane(PI, PI).unwrap();
    let grid =
        SurfaceGrid::build(&chart, n, n, [EdgeRule::Dirichlet, EdgeRule::Dirichlet]).unwrap();
    let op = assemble_laplace_beltrami(&grid, neutral()).unwrap();
    let config = SolverConfig { k: 1, shift: c(0.5, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();

    let h = PI / (n as f64 + 1.0);
    let fd_exact = 2.0 * (1.0 - h.cos()) / (h * h);
    assert_relative_eq!(r.eigenvalues[0].re, fd_exact, max_relative = 1e-9);
    assert_relative_eq!(r.eigenvalues[0].re, 1.0, max_relative = 5e-3);
}

#[test]
fn slab_dirichlet_ground_is_the_transverse_box_level() {
    // Flat slab: the lowest level is the transverse particle-in-a-box
    // ground energy pi^2 / (8 m eps^2), up to O(h3^2).
    let eps = 0.05;
    let chart = plane(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 6, 6, [EdgeRule::ZeroFlux, EdgeRule::ZeroFlux]).unwrap();
    let slab = SlabGrid::build(grid, eps, 8).unwrap();
    let op = assemble_slab(&slab, neutral(), None, BoundaryCondition::Dirichlet, Confinement::None)
        .unwrap();
    let config = SolverConfig { k: 1, shift: c(400.0, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();

    let continuum = PI * PI / (8.0 * eps * eps);
    assert_relative_eq!(r.eigenvalues[0].re, continuum, max_relative = 2.5e-2);
    assert_abs_diff_eq!(r.eigenvalues[0].im, 0.0, epsilon = 1e-8);
}

#[test]
fn slab_constraint_ground_is_zero_on_a_plane() {
    // M = 0 turns the constrained face rule into a pure Neumann closure;
    // the constant transverse mode then sits at exactly zero energy.
    let chart = plane(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 6, 6, [EdgeRule::ZeroFlux, EdgeRule::ZeroFlux]).unwrap();
    let slab = SlabGrid::build(grid, 0.05, 8).unwrap();
    let op = assemble_slab(
        &slab,
        neutral(),
        None,
        BoundaryCondition::neumann_default(),
        Confinement::None,
    )
    .unwrap();
    let config = SolverConfig { k: 1, shift: c(-5.0, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();
    assert!(
        r.eigenvalues[0].norm() <= 1e-8 * op.scale(),
        "plane constraint ground {}",
        r.eigenvalues[0]
    );
}

#[test]
fn harmonic_confinement_reproduces_the_oscillator_ground() {
    // omega = 2000 in a Neumann box of half-width 0.05: the walls clip
    // the Gaussian tail (omega eps^2 = 5) and pull the ground from
    // omega/2 = 1000 down to 961.86886 (fine-grid 1D reference with
    // Richardson extrapolation, frozen).
    let omega = 2000.0;
    let chart = plane(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 5, 5, [EdgeRule::ZeroFlux, EdgeRule::ZeroFlux]).unwrap();
    let slab = SlabGrid::build(grid, 0.05, 16).unwrap();
    let op = assemble_slab(
        &slab,
        neutral(),
        None,
        BoundaryCondition::neumann_default(),
        Confinement::Harmonic { omega },
    )
    .unwrap();
    let config = SolverConfig { k: 1, shift: c(800.0, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();
    assert_relative_eq!(r.eigenvalues[0].re, 961.8688605, max_relative = 1e-2);
}

#[test]
fn xi_reduction_defect_shrinks_quadratically() {
    // Flat space: the transformed and untransformed stencils agree
    // configuration by configuration, so the defect is exactly zero.
    let flat = plane(1.0, 1.0).unwrap();
    let s = sample_geometry(&flat, 0.4, 0.6).unwrap();
    let profile = |x: f64| (1.3 * x).cos() + 0.2 * x;
    assert_abs_diff_eq!(xi_reduction_check(&s, &profile, 1e-3), 0.0, epsilon = 1e-12);

    // Curved: second-order convergence to the identity.
    let chart = sphere(1.0).unwrap();
    let s = sample_geometry(&chart, 1.1, 0.7).unwrap();
    let d1 = xi_reduction_check(&s, &profile, 1e-3);
    let d2 = xi_reduction_check(&s, &profile, 5e-4);
    assert!(d1 <= 1e-4, "defect at h3 = 1e-3 is {d1:.3e}");
    assert!(d1 / d2 >= 1.8, "halving gained only {:.2}x", d1 / d2);
}

#[test]
fn thick_slab_is_rejected() {
    // Unit sphere: M = 2, so eps = 0.15 breaks eps * max|M| <= 0.2.
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 8, 8, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let err = SlabGrid::build(grid, 0.15, 8).err().expect("thick slab must be rejected");
    assert!(matches!(err, thinwall::Error::ThickSlab(_)), "got {err:?}");
    assert!(0.15 * 2.0 > THIN_WALL_LIMIT);
}

#[test]
fn charged_constraint_records_dropped_terms() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 8, 8, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let slab = SlabGrid::build(grid, 0.05, 6).unwrap();
    let field = uniform_z();

    let neutral_op = assemble_slab(
        &slab,
        neutral(),
        None,
        BoundaryCondition::neumann_default(),
        Confinement::None,
    )
    .unwrap();
    assert!(neutral_op.meta.dropped_terms.is_empty());

    let charged_op = assemble_slab(
        &slab,
        charged(),
        Some(&field),
        BoundaryCondition::neumann_default(),
        Confinement::None,
    )
    .unwrap();
    assert!(
        !charged_op.meta.dropped_terms.is_empty(),
        "gauge part of the face rule must be declared dropped"
    );
}

#[test]
fn metadata_comparability_guards_mixed_results() {
    let chart = sphere(1.0).unwrap();
    let g1 = SurfaceGrid::build(&chart, 8, 8, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let g2 = SurfaceGrid::build(&chart, 10, 10, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let field = uniform_z();
    let a = assemble_naive(&g1, charged(), &field).unwrap();
    let b = assemble_variational(&g2, charged(), &field, 1.0).unwrap();
    assert!(anomalous_delta(&a, &b).is_err(), "grids differ; delta must refuse");

    let b_half = assemble_variational(&g1, charged(), &field, 0.5).unwrap();
    assert!(anomalous_delta(&a, &b_half).is_err(), "nonstandard coef_adv must refuse");

    assert!(assemble_variational(&g1, charged(), &field, 0.0).is_err());
    assert!(assemble_variational(&g1, charged(), &field, 1.5).is_err());
}

#[test]
fn particle_params_are_validated() {
    assert!(ParticleParams::new(0.0, 1.0).is_err());
    assert!(ParticleParams::new(-1.0, 0.0).is_err());
    assert!(ParticleParams::new(f64::NAN, 0.0).is_err());
    assert!(ParticleParams::new(1.0, f64::INFINITY).is_err());
    let p = ParticleParams::default();
    assert_eq!(p.mass, 1.0);
    assert_eq!(p.charge, 0.0);
}
