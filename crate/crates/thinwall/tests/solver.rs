//! Sparse storage, LU, and the eigensolvers, on problems whose spectra
//! are known in closed form.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use num_complex::Complex64 as C;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinwall::assembly::{
    assemble_laplace_beltrami, assemble_naive, assemble_variational, EdgeRule, ParticleParams,
    SurfaceGrid,
};
use thinwall::em::VectorPotentialField;
use thinwall::geometry::{cylinder, sphere};
use thinwall::solve::{dense_eig, norm_drift, solve_dense, solve_lowest, DenseMatrix, SolverConfig};
use thinwall::sparse::{CsrMatrix, SparseLu};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[test]
fn csr_from_triplets_sums_duplicates_and_validates() {
    let m = CsrMatrix::from_triplets(
        3,
        vec![
            (0, 0, c(1.0, 0.0)),
            (0, 0, c(2.0, 0.5)),
            (2, 1, c(-1.0, 0.0)),
            (1, 2, c(0.0, 1.0)),
        ],
    )
    .unwrap();
    assert_eq!(m.nnz(), 3);
    assert_eq!(m.get(0, 0), c(3.0, 0.5));
    assert_eq!(m.get(2, 1), c(-1.0, 0.0));
    assert_eq!(m.get(1, 1), c(0.0, 0.0));

    assert!(CsrMatrix::from_triplets(2, vec![(2, 0, c(1.0, 0.0))]).is_err());
    assert!(CsrMatrix::from_triplets(2, vec![(0, 0, c(f64::NAN, 0.0))]).is_err());
}

#[test]
fn csr_matvec_transpose_and_shift() {
    let m = CsrMatrix::from_triplets(
        2,
        vec![(0, 0, c(1.0, 0.0)), (0, 1, c(2.0, -1.0)), (1, 0, c(0.0, 3.0))],
    )
    .unwrap();
    let y = m.apply(&[c(1.0, 0.0), c(0.0, 1.0)]);
    assert_eq!(y[0], c(1.0, 0.0) + c(2.0, -1.0) * c(0.0, 1.0));
    assert_eq!(y[1], c(0.0, 3.0));

    let t = m.transpose();
    assert_eq!(t.get(1, 0), c(2.0, -1.0));
    assert_eq!(t.get(0, 1), c(0.0, 3.0));

    let s = m.shifted(c(0.5, 0.0));
    assert_eq!(s.get(0, 0), c(0.5, 0.0));
    assert_eq!(s.get(1, 1), c(-0.5, 0.0));
    assert_relative_eq!(m.max_abs(), 3.0, max_relative = 1e-15);
}

#[test]
fn sparse_lu_solves_a_random_banded_system() {
    let n = 120;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut t = Vec::new();
    for i in 0..n {
        // Diagonally dominant band: stable without growth.
        t.push((i, i, c(6.0 + rng.gen::<f64>(), rng.gen::<f64>())));
        if i + 1 < n {
            t.push((i, i + 1, c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
            t.push((i + 1, i, c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
        }
        if i + 7 < n {
            t.push((i, i + 7, c(rng.gen::<f64>() - 0.5, 0.0)));
        }
    }
    let a = CsrMatrix::from_triplets(n, t).unwrap();
    let lu = SparseLu::factor(&a).unwrap();
    let x_true: Vec<C> = (0..n).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let b = a.apply(&x_true);
    let x = lu.solve(&b);
    let err: f64 = x.iter().zip(&x_true).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-11, "solve error {err:.3e}");
    assert!(lu.pivot_ratio().is_finite());

    let singular = CsrMatrix::from_triplets(2, vec![(0, 0, c(1.0, 0.0))]).unwrap();
    assert!(SparseLu::factor(&singular).is_err());
}

#[test]
fn dense_eig_finds_known_spectra() {
    // Rotation generator: eigenvalues ±i.
    let mut m = DenseMatrix::zeros(2);
    m[(0, 1)] = c(-1.0, 0.0);
    m[(1, 0)] = c(1.0, 0.0);
    let e = dense_eig(&m).unwrap();
    let mut ims: Vec<f64> = e.values.iter().map(|z| z.im).collect();
    ims.sort_by(f64::total_cmp);
    assert_relative_eq!(ims[0], -1.0, max_relative = 1e-12);
    assert_relative_eq!(ims[1], 1.0, max_relative = 1e-12);
    for v in &e.values {
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-12);
    }

    // Random Hermitian: real eigenvalues, honest residuals.
    let n = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut h = DenseMatrix::zeros(n);
    for i in 0..n {
        h[(i, i)] = c(rng.gen::<f64>(), 0.0);
        for j in (i + 1)..n {
            let z = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let e = dense_eig(&h).unwrap();
    assert_eq!(e.values.len(), n);
    for (lam, vec) in e.values.iter().zip(&e.vectors) {
        assert_abs_diff_eq!(lam.im, 0.0, epsilon = 1e-10);
        let mut r = 0.0f64;
        for i in 0..n {
            let mut acc = c(0.0, 0.0);
            for j in 0..n {
                acc += h[(i, j)] * vec[j];
            }
            r = r.max((acc - lam * vec[i]).norm());
        }
        assert!(r <= 1e-10, "residual {r:.3e} at {lam}");
    }
}

/// Free particle on a ring of radius 1: eigenvalues n^2 / 2 with
/// double degeneracy for n >= 1.
#[test]
fn ring_spectrum_with_degenerate_pairs() {
    let chart = cylinder(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 256, 1, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let op = assemble_laplace_beltrami(&grid, ParticleParams::neutral(1.0).unwrap()).unwrap();
    let config = SolverConfig { k: 5, shift: c(-0.1, 0.0), ..SolverConfig::default() };
    let r = solve_lowest(&op, &config).unwrap();
    r.require_converged().unwrap();

    let expect = [0.0, 0.5, 0.5, 2.0, 2.0];
    for (lam, want) in r.eigenvalues.iter().zip(expect) {
        assert_abs_diff_eq!(lam.im, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(lam.re, want, epsilon = 1e-3);
    }
    let sizes: Vec<usize> = r.clusters.iter().map(|cl| cl.len()).collect();
    assert_eq!(sizes, vec![1, 2, 2]);
    assert!(r.hermitian);
}

#[test]
fn iterative_matches_dense_oracle_above_the_cutoff() {
    // 16 x 16 sphere grid: dimension 256, above the internal dense
    // cutoff, small enough for the dense path to stay quick.
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 16, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let particle = ParticleParams::new(1.0, 1.0).unwrap();
    let field = VectorPotentialField::uniform(nalgebra::Vector3::new(0.0, 0.0, 1.0));

    for hermitian in [true, false] {
        let op = if hermitian {
            assemble_variational(&grid, particle, &field, 1.0).unwrap()
        } else {
            assemble_naive(&grid, particle, &field).unwrap()
        };
        let config = SolverConfig { k: 6, shift: c(-0.5, 0.0), ..SolverConfig::default() };
        let it = solve_lowest(&op, &config).unwrap();
        it.require_converged().unwrap();
        assert_eq!(
            it.method,
            if hermitian { "shift-invert-lanczos" } else { "shift-invert-arnoldi" }
        );

        let de = solve_dense(&op, &config).unwrap();
        assert_eq!(de.method, "dense");
        let scale = op.scale();
        for (a, b) in it.eigenvalues.iter().zip(&de.eigenvalues) {
            assert!(
                (a - b).norm() <= 1e-9 * scale,
                "iterative {a} vs dense {b} (scale {scale:.3e})"
            );
        }
    }
}

#[test]
fn repeated_runs_are_deterministic() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 16, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let field = VectorPotentialField::uniform(nalgebra::Vector3::new(0.0, 0.0, 1.0));
    let op = assemble_naive(&grid, ParticleParams::new(1.0, 1.0).unwrap(), &field).unwrap();
    let config = SolverConfig { k: 4, shift: c(-0.5, 0.0), ..SolverConfig::default() };
    let a = solve_lowest(&op, &config).unwrap();
    let b = solve_lowest(&op, &config).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).norm() <= 1e-12 * op.scale(), "{x} vs {y}");
    }
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn truncated_budget_reports_partial_convergence() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 20, 20, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let op = assemble_laplace_beltrami(&grid, ParticleParams::neutral(1.0).unwrap()).unwrap();
    let config = SolverConfig {
        k: 6,
        shift: c(-0.5, 0.0),
        max_iter: 1,
        ..SolverConfig::default()
    };
    let r = solve_lowest(&op, &config).unwrap();
    assert!(!r.all_converged());
    assert!(matches!(
        r.require_converged().unwrap_err(),
        thinwall::Error::NotConverged { .. }
    ));
}

#[test]
fn solver_config_is_validated() {
    let chart = cylinder(1.0, 1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 16, 1, [EdgeRule::Periodic, EdgeRule::ZeroFlux]).unwrap();
    let op = assemble_laplace_beltrami(&grid, ParticleParams::neutral(1.0).unwrap()).unwrap();
    for bad in [
        SolverConfig { k: 0, ..SolverConfig::default() },
        SolverConfig { k: 15, ..SolverConfig::default() }, // k > n - 2
        SolverConfig { tol: -1.0, ..SolverConfig::default() },
        SolverConfig { tol: f64::NAN, ..SolverConfig::default() },
        SolverConfig { max_iter: 0, ..SolverConfig::default() },
    ] {
        assert!(solve_lowest(&op, &bad).is_err(), "accepted {bad:?}");
    }
}

#[test]
fn norm_is_conserved_by_hermitian_evolution_only() {
    let chart = sphere(1.0).unwrap();
    let grid = SurfaceGrid::build(&chart, 12, 12, [EdgeRule::ZeroFlux, EdgeRule::Periodic]).unwrap();
    let particle = ParticleParams::new(1.0, 1.0).unwrap();
    let field = VectorPotentialField::uniform(nalgebra::Vector3::new(0.0, 0.0, 1.0));
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start: Vec<C> = (0..n).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();

    let max_drift = |norms: &[f64]| norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);

    let herm = assemble_variational(&grid, particle, &field, 1.0).unwrap();
    let dt = 1e-3 / herm.scale();
    let quiet = norm_drift(&herm, 200, dt, &start).unwrap();
    assert!(max_drift(&quiet.norms) <= 1e-8, "hermitian drift {:.3e}", max_drift(&quiet.norms));
    assert!(quiet.rate.abs() <= 1e-6 / dt * 1e-8);

    let naive = assemble_naive(&grid, particle, &field).unwrap();
    let noisy = norm_drift(&naive, 200, dt, &start).unwrap();
    assert!(
        max_drift(&noisy.norms) > 10.0 * max_drift(&quiet.norms).max(1e-14),
        "anti-hermitian part should leak norm: {:.3e}",
        max_drift(&noisy.norms)
    );

    // Stability guard on the step size.
    assert!(norm_drift(&herm, 10, 1.0, &start).is_err());
}
