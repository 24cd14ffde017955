//! Dimensionally reduced surface Hamiltonians.
//!
//! Both charged variants share the kinetic part (divergence-form
//! Laplace–Beltrami), the curvature potential `V0`, the diamagnetic
//! `q^2 A^2 / 2m` diagonal, the skew-adjoint tangential advection
//! `(i q / m) T`, `T = (A^a D_a + (1/sqrt g) D_a (sqrt g A^a .)) / 2`,
//! and the `(i q / 2m) div A` diagonal with the divergence taken
//! *ambiently* (finite differences in R^3).
//!
//! They differ in exactly one term: the naive reduction keeps the
//! normal-times-curvature coupling `-(i q / m) A3 M` on the diagonal,
//! the variational one does not. Every shared term is evaluated through
//! the same code path, so the difference of the two matrices is that
//! diagonal to the last bit.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::em::{decompose_on_surface, SurfaceFieldSample, VectorPotentialField, PROBE_DELTA};
use crate::err::{Error, Result};
use crate::geometry::geometric_potential;

use super::grid::{EdgeRule, SurfaceGrid};
use super::operator::{DiscreteOperator, OperatorMetadata, ParticleParams};

type C = Complex64;
type Triplet = (usize, usize, C);

fn c_re(x: f64) -> C {
    C::new(x, 0.0)
}

/// Which operator to build.
#[derive(Debug, Clone, Copy)]
enum Kind {
    LaplaceBeltrami,
    Naive,
    Variational { coef_adv: f64 },
}

/// Decompose the potential at every grid node.
pub fn sample_surface_field(
    grid: &SurfaceGrid,
    field: &VectorPotentialField,
) -> Result<Vec<SurfaceFieldSample>> {
    grid.samples
        .par_iter()
        .map(|s| decompose_on_surface(field, s, PROBE_DELTA))
        .collect()
}

/// Bare kinetic operator `-(1/2m) (1/sqrt g) D_a (sqrt g g^{ab} D_b .)`.
/// Annihilates constants on periodic / zero-flux grids.
pub fn assemble_laplace_beltrami(
    grid: &SurfaceGrid,
    particle: ParticleParams,
) -> Result<DiscreteOperator> {
    assemble_surface(grid, particle, None, Kind::LaplaceBeltrami)
}

/// Naive reduction: tangential minimal coupling plus the
/// curvature-normal coupling `-(i q / m) A3 M` that a blind substitution
/// of the constrained wavefunction produces. Not Hermitian whenever
/// `q A3 M` is nonzero somewhere.
pub fn assemble_naive(
    grid: &SurfaceGrid,
    particle: ParticleParams,
    field: &VectorPotentialField,
) -> Result<DiscreteOperator> {
    assemble_surface(grid, particle, Some(field), Kind::Naive)
}

/// Variational reduction: the limit of the thin-slab problem. Same
/// terms as the naive operator except the anomalous diagonal.
/// `coef_adv` rescales the tangential advection (1.0 is the standard
/// reduction; 0.5 reproduces a halved-coupling variant for comparison
/// studies).
pub fn assemble_variational(
    grid: &SurfaceGrid,
    particle: ParticleParams,
    field: &VectorPotentialField,
    coef_adv: f64,
) -> Result<DiscreteOperator> {
    if !(coef_adv.is_finite()) || coef_adv <= 0.0 || coef_adv > 1.0 {
        return Err(Error::Config(format!(
            "advection coefficient must lie in (0, 1], got {coef_adv}"
        )));
    }
    assemble_surface(grid, particle, Some(field), Kind::Variational { coef_adv })
}

/// Covariant surface divergence of the tangential field,
/// `(1/sqrt g) d_a (sqrt g A^a)`, one value per grid node.
///
/// Central differences in the interior and across periodic seams,
/// third-order one-sided stencils on bounded edges (the field is a
/// smooth ambient object, so no wavefunction boundary rule applies).
/// Suppressed directions contribute nothing. Feeds
/// [`crate::em::surface_divergence_identity`].
pub fn surface_divergence(
    grid: &SurfaceGrid,
    samples: &[SurfaceFieldSample],
) -> Result<Vec<f64>> {
    if samples.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} field samples on a {} node grid",
            samples.len(),
            grid.len()
        )));
    }
    let flux = |d: usize, iu: usize, iv: usize| -> f64 {
        let p = grid.idx(iu, iv);
        grid.samples[p].det_g.sqrt() * samples[p].a_con[d]
    };
    let mut div = vec![0.0f64; grid.len()];
    for iv in 0..grid.n[1] {
        for iu in 0..grid.n[0] {
            let p = grid.idx(iu, iv);
            let mut acc = 0.0;
            for d in 0..2 {
                if !grid.active[d] {
                    continue;
                }
                let (i, nd, h) = if d == 0 {
                    (iu, grid.n[0], grid.h[0])
                } else {
                    (iv, grid.n[1], grid.h[1])
                };
                let at = |j: usize| if d == 0 { flux(d, j, iv) } else { flux(d, iu, j) };
                let periodic = grid.edges[d] == EdgeRule::Periodic;
                // Third-order one-sided stencils at bounded edges: on
                // charts whose measure degenerates toward an edge (the
                // clipped sphere poles) the edge error is amplified by
                // 1/sqrt(g), and one extra order keeps the total defect
                // O(h^2) uniformly instead of O(h) on the edge rings.
                acc += if periodic {
                    (at((i + 1) % nd) - at((i + nd - 1) % nd)) / (2.0 * h)
                } else if i == 0 {
                    (-11.0 * at(0) + 18.0 * at(1) - 9.0 * at(2) + 2.0 * at(3)) / (6.0 * h)
                } else if i == nd - 1 {
                    (11.0 * at(nd - 1) - 18.0 * at(nd - 2) + 9.0 * at(nd - 3)
                        - 2.0 * at(nd - 4))
                        / (6.0 * h)
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * h)
                };
            }
            div[p] = acc / grid.samples[p].det_g.sqrt();
        }
    }
    Ok(div)
}

/// Difference `H_naive - H_variational` for operators built on the same
/// grid, particle and field, with `coef_adv = 1`. Because every shared
/// term is assembled identically, the result is exactly the anomalous
/// diagonal `-(i q / m) A3 M` (an empty matrix for `q = 0`).
pub fn anomalous_delta(
    naive: &DiscreteOperator,
    variational: &DiscreteOperator,
) -> Result<DiscreteOperator> {
    if naive.meta.variant != "naive" || variational.meta.variant != "variational" {
        return Err(Error::MetadataMismatch(format!(
            "anomalous delta needs (naive, variational), got ({}, {})",
            naive.meta.variant, variational.meta.variant
        )));
    }
    naive.meta.comparable(&variational.meta)?;
    if variational.meta.coef_adv != 1.0 {
        return Err(Error::MetadataMismatch(format!(
            "anomalous delta is only meaningful against the standard reduction \
             (coef_adv = 1), got {}",
            variational.meta.coef_adv
        )));
    }
    let matrix = naive.matrix.add_scaled(&variational.matrix, c_re(-1.0))?;
    let mut meta = naive.meta.clone();
    meta.variant = "delta".into();
    meta.dropped_terms = vec![];
    Ok(DiscreteOperator { matrix, weights: naive.weights.clone(), meta })
}

fn assemble_surface(
    grid: &SurfaceGrid,
    particle: ParticleParams,
    field: Option<&VectorPotentialField>,
    kind: Kind,
) -> Result<DiscreteOperator> {
    let fs = match field {
        Some(f) => Some(sample_surface_field(grid, f)?),
        None => None,
    };
    let n = grid.len();
    let mut tri: Vec<Triplet> = Vec::with_capacity(12 * n);

    kinetic_triplets(grid, particle.mass, &mut tri);

    if let Some(fs) = &fs {
        let coef = match kind {
            Kind::Variational { coef_adv } => coef_adv,
            _ => 1.0,
        };
        // i q coef / m: the prefactor of the skew-adjoint advection.
        let fac = C::new(0.0, particle.charge * coef / particle.mass);
        advection_triplets(grid, fs, fac, &mut tri);

        let q = particle.charge;
        let m = particle.mass;
        for (p, f) in fs.iter().enumerate() {
            // Diamagnetic + scalar potential + ambient-divergence terms.
            let mut d = c_re(q * q * f.a_sq / (2.0 * m) - q * f.a_t);
            d += C::new(0.0, q * f.div3 / (2.0 * m));
            if matches!(kind, Kind::Naive) {
                // The anomalous curvature-normal coupling.
                let mcurv = grid.samples[p].mean_curv;
                d += C::new(0.0, -q * f.a3 * mcurv / m);
            }
            if d != c_re(0.0) {
                tri.push((p, p, d));
            }
        }
    }

    if !matches!(kind, Kind::LaplaceBeltrami) {
        for (p, s) in grid.samples.iter().enumerate() {
            let v0 = geometric_potential(s, particle.mass);
            if v0 != 0.0 {
                tri.push((p, p, c_re(v0)));
            }
        }
    }

    let matrix = crate::sparse::CsrMatrix::from_triplets(n, tri)?;
    let (variant, coef_adv, dropped) = match kind {
        Kind::LaplaceBeltrami => ("laplace_beltrami", 1.0, vec![]),
        Kind::Naive => ("naive", 1.0, vec!["a3_d3_advection".to_string()]),
        Kind::Variational { coef_adv } => (
            "variational",
            coef_adv,
            vec!["a3_d3_advection".to_string(), "a3_m_coupling".to_string()],
        ),
    };
    let meta = OperatorMetadata {
        variant: variant.into(),
        mass: particle.mass,
        charge: particle.charge,
        coef_adv,
        field: field.map(|f| f.label.clone()).unwrap_or_else(|| "none".into()),
        chart: grid.chart_label.clone(),
        grid: format!("{}x{}", grid.n[0], grid.n[1]),
        grid_hash: grid.hash.clone(),
        edges: grid.edges.iter().map(|e| e.to_string()).collect(),
        bc: None,
        eps: None,
        div_route: if field.is_some() { "ambient_fd".into() } else { "none".into() },
        dropped_terms: dropped,
        units: OperatorMetadata::units_default(),
        dim: n,
    };
    Ok(DiscreteOperator { matrix, weights: grid.weights.clone(), meta })
}

/// Divergence-form kinetic faces. Face coefficients
/// `b_d = sqrt(g) g^{dd}` are averaged from the adjacent nodes; at a
/// Dirichlet wall the coefficient is evaluated on the wall itself where
/// the chart allows it. Zero-flux edges contribute nothing by
/// construction.
fn kinetic_triplets(grid: &SurfaceGrid, mass: f64, tri: &mut Vec<Triplet>) {
    let n = grid.len();
    let sg: Vec<f64> = grid.samples.iter().map(|s| s.det_g.sqrt()).collect();
    let b: [Vec<f64>; 2] = [
        grid.samples.iter().map(|s| s.det_g.sqrt() * s.metric_inv[(0, 0)]).collect(),
        grid.samples.iter().map(|s| s.det_g.sqrt() * s.metric_inv[(1, 1)]).collect(),
    ];

    for d in 0..2 {
        if !grid.active[d] {
            continue;
        }
        let h2 = grid.h[d] * grid.h[d];
        let nd = grid.n[d];
        let ne = grid.n[1 - d];
        for ic in 0..ne {
            let node = |i: usize| if d == 0 { grid.idx(i, ic) } else { grid.idx(ic, i) };
            let mut face = |p: usize, q: usize| {
                let bf = 0.5 * (b[d][p] + b[d][q]);
                let cp = bf / (2.0 * mass * h2 * sg[p]);
                let cq = bf / (2.0 * mass * h2 * sg[q]);
                tri.push((p, p, c_re(cp)));
                tri.push((p, q, c_re(-cp)));
                tri.push((q, q, c_re(cq)));
                tri.push((q, p, c_re(-cq)));
            };
            for i in 0..nd - 1 {
                face(node(i), node(i + 1));
            }
            match grid.edges[d] {
                EdgeRule::Periodic => face(node(nd - 1), node(0)),
                EdgeRule::Dirichlet => {
                    for (side, i) in [(0usize, 0usize), (1, nd - 1)] {
                        let p = node(i);
                        let be = grid
                            .edge_sample(d, side, ic)
                            .map(|s| s.det_g.sqrt() * s.metric_inv[(d, d)])
                            .unwrap_or(b[d][p]);
                        tri.push((p, p, c_re(be / (2.0 * mass * h2 * sg[p]))));
                    }
                }
                EdgeRule::ZeroFlux => {}
            }
        }
    }

    // Mixed second derivatives, present only on non-orthogonal charts:
    // a symmetric 9-point stencil whose corner brackets are shared
    // between mirrored entries.
    let buv: Vec<f64> =
        grid.samples.iter().map(|s| s.det_g.sqrt() * s.metric_inv[(0, 1)]).collect();
    let bscale = buv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let dscale = (0..n).map(|i| b[0][i].abs().max(b[1][i].abs())).fold(0.0, f64::max);
    if grid.active[0] && grid.active[1] && bscale > 1e-12 * dscale {
        let (nu, nv) = (grid.n[0], grid.n[1]);
        let step = |i: usize, s: i64, nn: usize, rule: EdgeRule| -> Option<usize> {
            let j = i as i64 + s;
            if rule == EdgeRule::Periodic {
                Some(j.rem_euclid(nn as i64) as usize)
            } else if j >= 0 && (j as usize) < nn {
                Some(j as usize)
            } else {
                None
            }
        };
        let denom = 4.0 * grid.h[0] * grid.h[1];
        for iv in 0..nv {
            for iu in 0..nu {
                let p = grid.idx(iu, iv);
                for (su, sv, sign) in
                    [(1i64, 1i64, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)]
                {
                    let (Some(ju), Some(jv)) = (
                        step(iu, su, nu, grid.edges[0]),
                        step(iv, sv, nv, grid.edges[1]),
                    ) else {
                        continue;
                    };
                    let q = grid.idx(ju, jv);
                    // Bracket: buv at the two edge-adjacent nodes.
                    let bu_n = grid.idx(ju, iv);
                    let bv_n = grid.idx(iu, jv);
                    let bracket = buv[bu_n] + buv[bv_n];
                    let val = -sign * bracket / (denom * 2.0 * mass * sg[p]);
                    tri.push((p, q, c_re(val)));
                }
            }
        }
    }
}

/// Skew-adjoint tangential advection, assembled per face so the
/// weighted skew symmetry holds to rounding. For face `(p, q)` along
/// `d` the shared coefficient is
/// `s_f = (sqrt(g_p) A^d_p + sqrt(g_q) A^d_q) / 2`, giving
/// `T[p][q] = +s_f / (2 h sqrt(g_p))`, `T[q][p] = -s_f / (2 h sqrt(g_q))`.
fn advection_triplets(
    grid: &SurfaceGrid,
    fs: &[SurfaceFieldSample],
    fac: C,
    tri: &mut Vec<Triplet>,
) {
    let sg: Vec<f64> = grid.samples.iter().map(|s| s.det_g.sqrt()).collect();
    for d in 0..2 {
        if !grid.active[d] {
            continue;
        }
        let sga: Vec<f64> = (0..grid.len()).map(|i| sg[i] * fs[i].a_con[d]).collect();
        let h = grid.h[d];
        let nd = grid.n[d];
        let ne = grid.n[1 - d];
        for ic in 0..ne {
            let node = |i: usize| if d == 0 { grid.idx(i, ic) } else { grid.idx(ic, i) };
            let mut face = |p: usize, q: usize| {
                let sf = 0.5 * (sga[p] + sga[q]);
                if sf == 0.0 {
                    return;
                }
                tri.push((p, q, fac * c_re(sf / (2.0 * h * sg[p]))));
                tri.push((q, p, fac * c_re(-sf / (2.0 * h * sg[q]))));
            };
            for i in 0..nd - 1 {
                face(node(i), node(i + 1));
            }
            if grid.edges[d] == EdgeRule::Periodic {
                face(node(nd - 1), node(0));
            }
            // Dirichlet and zero-flux edges: the boundary face carries
            // no advective flux (the state or the flux vanishes there).
        }
    }
}
