//! Full 3D Hamiltonian on a thin curved slab.
//!
//! Coordinates: surface point `(u, v)` plus a transverse offset `x3`,
//! with positions `r(u,v) - x3 n(u,v)` so that the layer metric is
//! `G(x3) = g - 2 x3 K + x3^2 K g^{-1} K` (block-diagonal with
//! `G_33 = 1`) and the volume element is `sqrt(det G) = xi sqrt(det g)`
//! exactly. Everything is assembled in divergence (flux) form, so the
//! metric "spontaneously" produces the geometric potential in the thin
//! limit — no `V0` is added here.
//!
//! Transverse boundary handling:
//! * `Dirichlet` — the face nodes at `x3 = ±eps` are frozen to zero
//!   (decoupled penalty rows), giving a hard wall of width exactly
//!   `2 eps`.
//! * `NeumannConstraint { c_a, c_m }` — the face flux is eliminated
//!   with `d3 chi = (i c_a q A3 - c_m M) chi` imposed at both faces,
//!   the curvature-coupled condition with its default coefficients
//!   `(2, 2)`. Boundary rows are half cells, so the weighted symmetry
//!   (exact for `q = 0`) uses the trapezoid measure.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::VectorPotentialField;
use crate::err::{Error, Result};
use crate::geometry::{offset_metric, xi_factor, GeometrySample};

use super::grid::{EdgeRule, SlabGrid};
use super::operator::{DiscreteOperator, OperatorMetadata, ParticleParams};

type C = Complex64;
type Triplet = (usize, usize, C);

fn c_re(x: f64) -> C {
    C::new(x, 0.0)
}

fn two() -> f64 {
    2.0
}

/// Scale of the decoupled diagonal put on frozen Dirichlet face rows,
/// relative to the transverse kinetic unit `1/(2 m h3^2)`. Large enough
/// to push the fake modes far above any spectrum of interest.
const WALL_PENALTY: f64 = 1e3;

/// Transverse boundary condition at the slab faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// Hard wall: the state vanishes at `x3 = ±eps`.
    Dirichlet,
    /// `(d3 - c_a i q A3 + c_m M) chi = 0` at both faces.
    NeumannConstraint {
        #[serde(default = "two")]
        c_a: f64,
        #[serde(default = "two")]
        c_m: f64,
    },
}

impl BoundaryCondition {
    /// The curvature-coupled constraint with its standard coefficients.
    pub fn neumann_default() -> Self {
        BoundaryCondition::NeumannConstraint { c_a: 2.0, c_m: 2.0 }
    }

    pub fn label(&self) -> String {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet".into(),
            BoundaryCondition::NeumannConstraint { c_a, c_m } => {
                format!("neumann_constraint(c_a={c_a}, c_m={c_m})")
            }
        }
    }
}

/// Optional in-slab confining potential added on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Confinement {
    None,
    /// `m omega^2 x3^2 / 2`.
    Harmonic { omega: f64 },
}

impl Confinement {
    fn value(&self, mass: f64, x3: f64) -> f64 {
        match self {
            Confinement::None => 0.0,
            Confinement::Harmonic { omega } => 0.5 * mass * omega * omega * x3 * x3,
        }
    }
}

/// Per-node precomputed layer data.
struct NodeData {
    xi: f64,
    /// sqrt(det G) = xi * sqrt(det g).
    sqg: f64,
    /// sqrt(det G) * G^{ab} row: (uu, vv, uv).
    b: [f64; 3],
    /// Contravariant tangential potential components A^a at this layer.
    acon: Vector2<f64>,
    /// Transverse covariant component (along +x3, i.e. -n).
    a3: f64,
    /// Real diagonal: diamagnetic + scalar potential + confinement.
    diag: f64,
}

fn layer_inverse(sample: &GeometrySample, x3: f64) -> Result<(f64, f64, Matrix2<f64>)> {
    let xi = xi_factor(sample, x3);
    let det = xi * xi * sample.det_g;
    if !(det > 0.0) || !xi.is_finite() {
        return Err(Error::ThickSlab(format!(
            "layer metric degenerates at x3 = {x3} (xi = {xi})"
        )));
    }
    let gm = offset_metric(sample, x3);
    let inv = Matrix2::new(gm[(1, 1)], -gm[(0, 1)], -gm[(1, 0)], gm[(0, 0)]) / det;
    Ok((xi, det.sqrt(), inv))
}

fn layer_node(
    sample: &GeometrySample,
    x3: f64,
    field: Option<&VectorPotentialField>,
    particle: ParticleParams,
    conf: &Confinement,
) -> Result<NodeData> {
    let (xi, sqg, inv) = layer_inverse(sample, x3)?;
    let b = [sqg * inv[(0, 0)], sqg * inv[(1, 1)], sqg * inv[(0, 1)]];
    let mut acon = Vector2::zeros();
    let mut a3 = 0.0;
    let mut diag = conf.value(particle.mass, x3);
    if let Some(f) = field {
        let pos = sample.position - x3 * sample.normal;
        let a = f.a(&pos);
        let at = f.a_t(&pos);
        if !(a.iter().all(|c| c.is_finite()) && at.is_finite()) {
            return Err(Error::SourceOnSurface(format!(
                "potential is singular at slab node ({}, {}, {})",
                pos.x, pos.y, pos.z
            )));
        }
        // Exact tangents of the offset layer: t_a = (I - x3 W) r_a.
        let w = sample.metric_inv * sample.shape;
        let t_u = sample.e_u - x3 * (w[(0, 0)] * sample.e_u + w[(1, 0)] * sample.e_v);
        let t_v = sample.e_v - x3 * (w[(0, 1)] * sample.e_u + w[(1, 1)] * sample.e_v);
        let acov = Vector2::new(a.dot(&t_u), a.dot(&t_v));
        acon = inv * acov;
        a3 = -a.dot(&sample.normal);
        let asq = acov.dot(&acon) + a3 * a3;
        let q = particle.charge;
        diag += q * q * asq / (2.0 * particle.mass) - q * at;
    }
    Ok(NodeData { xi, sqg, b, acon, a3, diag })
}

/// Assemble the slab Hamiltonian
/// `(1/2m) (-i grad - q A)^2 + V_conf` in layer coordinates.
pub fn assemble_slab(
    slab: &SlabGrid,
    particle: ParticleParams,
    field: Option<&VectorPotentialField>,
    bc: BoundaryCondition,
    confinement: Confinement,
) -> Result<DiscreteOperator> {
    if let Confinement::Harmonic { omega } = confinement {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::Config(format!(
                "harmonic confinement needs omega >= 0, got {omega}"
            )));
        }
    }
    let grid = &slab.surface;
    let ns = grid.len();
    let n3 = slab.n3;
    let kmax = n3 - 1;
    let dim = ns * n3;
    let dirichlet = bc == BoundaryCondition::Dirichlet;
    let wall = |k: usize| dirichlet && (k == 0 || k == kmax);

    // Precompute layer data for every (surface node, level).
    let nodes: Vec<NodeData> = (0..ns)
        .into_par_iter()
        .map(|s| -> Result<Vec<NodeData>> {
            let sample = &grid.samples[s];
            slab.x3
                .iter()
                .map(|&x3| layer_node(sample, x3, field, particle, &confinement))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    // Half-level xi values, indexed by the lower node level.
    let xi_half: Vec<Vec<f64>> = grid
        .samples
        .iter()
        .map(|s| (0..kmax).map(|k| xi_factor(s, slab.x3[k] + 0.5 * slab.h3)).collect())
        .collect();

    let m = particle.mass;
    let q = particle.charge;
    let fac = C::new(0.0, q / m);
    let mut tri: Vec<Triplet> = Vec::with_capacity(10 * dim);

    // --- In-layer (surface-direction) terms, level by level. ---
    for d in 0..2 {
        if !grid.active[d] {
            continue;
        }
        let h = grid.h[d];
        let h2 = h * h;
        let nd = grid.n[d];
        let ne = grid.n[1 - d];
        for k in 0..n3 {
            if wall(k) {
                continue;
            }
            let x3 = slab.x3[k];
            for ic in 0..ne {
                let node = |i: usize| -> usize {
                    let s = if d == 0 { grid.idx(i, ic) } else { grid.idx(ic, i) };
                    slab.idx(s, k)
                };
                let mut face = |p: usize, q_: usize| {
                    let bf = 0.5 * (nodes[p].b[d] + nodes[q_].b[d]);
                    let cp = bf / (2.0 * m * h2 * nodes[p].sqg);
                    let cq = bf / (2.0 * m * h2 * nodes[q_].sqg);
                    tri.push((p, p, c_re(cp)));
                    tri.push((p, q_, c_re(-cp)));
                    tri.push((q_, q_, c_re(cq)));
                    tri.push((q_, p, c_re(-cq)));
                    if q != 0.0 && field.is_some() {
                        let sf = 0.5
                            * (nodes[p].sqg * nodes[p].acon[d]
                                + nodes[q_].sqg * nodes[q_].acon[d]);
                        if sf != 0.0 {
                            tri.push((p, q_, fac * c_re(sf / (2.0 * h * nodes[p].sqg))));
                            tri.push((q_, p, fac * c_re(-sf / (2.0 * h * nodes[q_].sqg))));
                        }
                    }
                };
                for i in 0..nd - 1 {
                    face(node(i), node(i + 1));
                }
                match grid.edges[d] {
                    EdgeRule::Periodic => face(node(nd - 1), node(0)),
                    EdgeRule::Dirichlet => {
                        for (side, i) in [(0usize, 0usize), (1, nd - 1)] {
                            let p = node(i);
                            let be = match grid.edge_sample(d, side, ic) {
                                Some(es) => {
                                    let (_, sqg_e, inv_e) = layer_inverse(es, x3)?;
                                    sqg_e * inv_e[(d, d)]
                                }
                                None => nodes[p].b[d],
                            };
                            tri.push((p, p, c_re(be / (2.0 * m * h2 * nodes[p].sqg))));
                        }
                    }
                    EdgeRule::ZeroFlux => {}
                }
            }
        }
    }

    // Mixed in-layer derivatives (non-orthogonal charts only).
    let bscale = nodes.iter().fold(0.0f64, |a, nd| a.max(nd.b[2].abs()));
    let dscale = nodes.iter().fold(0.0f64, |a, nd| a.max(nd.b[0].abs()).max(nd.b[1].abs()));
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
        for k in 0..n3 {
            if wall(k) {
                continue;
            }
            for iv in 0..nv {
                for iu in 0..nu {
                    let p = slab.idx(grid.idx(iu, iv), k);
                    for (su, sv, sign) in
                        [(1i64, 1i64, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)]
                    {
                        let (Some(ju), Some(jv)) = (
                            step(iu, su, nu, grid.edges[0]),
                            step(iv, sv, nv, grid.edges[1]),
                        ) else {
                            continue;
                        };
                        let qn = slab.idx(grid.idx(ju, jv), k);
                        let bracket = nodes[slab.idx(grid.idx(ju, iv), k)].b[2]
                            + nodes[slab.idx(grid.idx(iu, jv), k)].b[2];
                        let val = -sign * bracket / (denom * 2.0 * m * nodes[p].sqg);
                        tri.push((p, qn, c_re(val)));
                    }
                }
            }
        }
    }

    // --- Transverse terms, surface node by surface node. ---
    let h3 = slab.h3;
    let h32 = h3 * h3;
    for s in 0..ns {
        // Half-cell rows at the faces under the Neumann constraint.
        let row_factor =
            |k: usize| if !dirichlet && (k == 0 || k == kmax) { 2.0 } else { 1.0 };
        for k in 0..kmax {
            let (p, pn) = (slab.idx(s, k), slab.idx(s, k + 1));
            let xh = xi_half[s][k];
            let c_lo = xh / (2.0 * m * h32 * nodes[p].xi);
            let c_hi = xh / (2.0 * m * h32 * nodes[pn].xi);
            if dirichlet && k == 0 {
                tri.push((pn, pn, c_re(c_hi)));
                continue;
            }
            if dirichlet && k + 1 == kmax {
                tri.push((p, p, c_re(c_lo)));
                continue;
            }
            let (rl, rh) = (row_factor(k), row_factor(k + 1));
            tri.push((p, p, c_re(rl * c_lo)));
            tri.push((p, pn, c_re(-rl * c_lo)));
            tri.push((pn, pn, c_re(rh * c_hi)));
            tri.push((pn, p, c_re(-rh * c_hi)));
            if q != 0.0 && field.is_some() {
                let s3f = 0.5 * (nodes[p].xi * nodes[p].a3 + nodes[pn].xi * nodes[pn].a3);
                if s3f != 0.0 {
                    tri.push((p, pn, fac * c_re(rl * s3f / (2.0 * h3 * nodes[p].xi))));
                    tri.push((pn, p, fac * c_re(-rh * s3f / (2.0 * h3 * nodes[pn].xi))));
                }
            }
        }
        if let BoundaryCondition::NeumannConstraint { c_a, c_m } = bc {
            // Face flux eliminated with d3 chi = (i c_a q A3 - c_m M) chi.
            let mcurv = grid.samples[s].mean_curv;
            let beta = |k: usize| C::new(c_m * mcurv, -c_a * q * nodes[slab.idx(s, k)].a3);
            let bot = slab.idx(s, 0);
            let top = slab.idx(s, kmax);
            tri.push((bot, bot, -beta(0) / c_re(m * h3)));
            tri.push((top, top, beta(kmax) / c_re(m * h3)));
        }
    }

    // --- Diagonal: diamagnetic, scalar potential, confinement. ---
    for s in 0..ns {
        for k in 0..n3 {
            if wall(k) {
                continue;
            }
            let p = slab.idx(s, k);
            if nodes[p].diag != 0.0 {
                tri.push((p, p, c_re(nodes[p].diag)));
            }
        }
    }

    // Frozen face rows for the hard wall.
    if dirichlet {
        let penalty = WALL_PENALTY / (2.0 * m * h32);
        for s in 0..ns {
            tri.push((slab.idx(s, 0), slab.idx(s, 0), c_re(penalty)));
            tri.push((slab.idx(s, kmax), slab.idx(s, kmax), c_re(penalty)));
        }
    }

    let matrix = crate::sparse::CsrMatrix::from_triplets(dim, tri)?;
    let dropped = if q != 0.0 && field.is_some() && !dirichlet {
        vec!["boundary_advection_flux".to_string()]
    } else {
        vec![]
    };
    let meta = OperatorMetadata {
        variant: "slab3d".into(),
        mass: m,
        charge: q,
        coef_adv: 1.0,
        field: field.map(|f| f.label.clone()).unwrap_or_else(|| "none".into()),
        chart: grid.chart_label.clone(),
        grid: format!("{}x{}x{}", grid.n[0], grid.n[1], n3),
        grid_hash: slab.hash.clone(),
        edges: grid.edges.iter().map(|e| e.to_string()).collect(),
        bc: Some(bc.label()),
        eps: Some(slab.eps),
        div_route: "none".into(),
        dropped_terms: dropped,
        units: OperatorMetadata::units_default(),
        dim,
    };
    Ok(DiscreteOperator { matrix, weights: slab.weights(), meta })
}
