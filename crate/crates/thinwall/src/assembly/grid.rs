//! Structured grids over a chart (surface) and through the normal
//! direction (slab), with the edge closures that define how stencils
//! terminate at non-periodic boundaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::err::{Error, Result};
use crate::geometry::{sample_geometry, xi_factor, GeometrySample, SurfaceChart};

/// How a non-periodic grid direction terminates.
///
/// * `Periodic` — wraps; only valid when the chart itself closes up.
/// * `Dirichlet` — homogeneous wall just outside the first and last
///   node row (nodes at `lo + (i+1) h`, `h = span / (n+1)`).
/// * `ZeroFlux` — cell-centred nodes (`lo + (i+1/2) h`, `h = span / n`)
///   with the outermost face flux forced to zero. This is the natural
///   closure at coordinate degeneracies such as sphere poles, where the
///   face coefficient `sqrt(g) g^{uu}` vanishes anyway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    Periodic,
    Dirichlet,
    ZeroFlux,
}

impl std::fmt::Display for EdgeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EdgeRule::Periodic => "periodic",
            EdgeRule::Dirichlet => "dirichlet",
            EdgeRule::ZeroFlux => "zero_flux",
        };
        f.write_str(s)
    }
}

/// Node-sampled geometry over a chart. Node `(iu, iv)` lives at flat
/// index `iv * n[0] + iu`.
pub struct SurfaceGrid {
    pub chart_label: String,
    pub n: [usize; 2],
    pub h: [f64; 2],
    pub edges: [EdgeRule; 2],
    /// A direction with a single node is inactive: no derivatives are
    /// taken along it (used for rings: a cylinder grid with `n_v = 1`).
    pub active: [bool; 2],
    pub coords: [Vec<f64>; 2],
    pub samples: Vec<GeometrySample>,
    /// Quadrature weights `sqrt(det g) h_u h_v`.
    pub weights: Vec<f64>,
    /// Geometry at the domain edge for Dirichlet face coefficients,
    /// indexed `[u_lo, u_hi, v_lo, v_hi]`; `None` when the chart cannot
    /// be sampled there (tabulated charts).
    edge_samples: [Option<Vec<GeometrySample>>; 4],
    pub hash: String,
}

fn node_coords(lo: f64, span: f64, n: usize, rule: EdgeRule) -> (f64, Vec<f64>) {
    match rule {
        EdgeRule::Periodic => {
            let h = span / n as f64;
            (h, (0..n).map(|i| lo + i as f64 * h).collect())
        }
        EdgeRule::Dirichlet => {
            let h = span / (n as f64 + 1.0);
            (h, (0..n).map(|i| lo + (i as f64 + 1.0) * h).collect())
        }
        EdgeRule::ZeroFlux => {
            let h = span / n as f64;
            (h, (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect())
        }
    }
}

impl SurfaceGrid {
    /// Sample a chart on an `n_u x n_v` grid with the given edge
    /// closures.
    pub fn build(
        chart: &SurfaceChart,
        n_u: usize,
        n_v: usize,
        edges: [EdgeRule; 2],
    ) -> Result<SurfaceGrid> {
        let n = [n_u, n_v];
        let mut h = [0.0f64; 2];
        let mut coords: [Vec<f64>; 2] = [vec![], vec![]];
        let mut active = [true; 2];
        for d in 0..2 {
            if n[d] == 0 {
                return Err(Error::GridTooCoarse("grid dimension is zero".into()));
            }
            if n[d] == 1 {
                // Suppressed direction: one row in the middle, weighted
                // by the full span.
                active[d] = false;
                h[d] = chart.span(d);
                coords[d] = vec![chart.domain[d][0] + 0.5 * chart.span(d)];
                continue;
            }
            if n[d] < 4 {
                return Err(Error::GridTooCoarse(format!(
                    "direction {d} has {} nodes; the stencils need at least 4",
                    n[d]
                )));
            }
            if (edges[d] == EdgeRule::Periodic) != chart.periodic[d] {
                return Err(Error::Config(format!(
                    "edge rule {} is inconsistent with chart periodicity in direction {d}",
                    edges[d]
                )));
            }
            let (hd, cs) = node_coords(chart.domain[d][0], chart.span(d), n[d], edges[d]);
            h[d] = hd;
            coords[d] = cs;
        }
        if let Some(t) = chart.table() {
            // Tabulated charts carry no information between lattice
            // nodes, so the grid must coincide with the lattice: same
            // node count, and a node placement that lands on lattice
            // points (periodic origin-aligned, or Dirichlet with the
            // wall one spacing outside — which shifts nodes by exactly
            // one lattice cell and is rejected; only Periodic matches).
            let tn = [t.n_u, t.n_v];
            let th = [t.du, t.dv];
            for d in 0..2 {
                if !active[d] {
                    continue;
                }
                let matches = n[d] == tn[d]
                    && (h[d] - th[d]).abs() <= 1e-9 * th[d]
                    && edges[d] == EdgeRule::Periodic;
                if !matches {
                    return Err(Error::GridMismatch(format!(
                        "grids over tabulated charts must reuse the table lattice \
                         (periodic, {} nodes in direction {d})",
                        tn[d]
                    )));
                }
            }
        }

        let n_total = n[0] * n[1];
        let samples: Result<Vec<GeometrySample>> = (0..n_total)
            .into_par_iter()
            .map(|idx| {
                let iu = idx % n[0];
                let iv = idx / n[0];
                sample_geometry(chart, coords[0][iu], coords[1][iv])
            })
            .collect();
        let samples = samples?;
        let weights: Vec<f64> =
            samples.iter().map(|s| s.det_g.sqrt() * h[0] * h[1]).collect();

        // Edge geometry for Dirichlet face coefficients (closure charts
        // only; the face coefficient falls back to the node value for
        // tables).
        let mut edge_samples: [Option<Vec<GeometrySample>>; 4] = [None, None, None, None];
        if !chart.is_table() {
            for d in 0..2 {
                if edges[d] != EdgeRule::Dirichlet || !active[d] {
                    continue;
                }
                for (side, bound) in [(0usize, chart.domain[d][0]), (1, chart.domain[d][1])] {
                    let other = 1 - d;
                    let row: Result<Vec<GeometrySample>> = coords[other]
                        .iter()
                        .map(|&c| {
                            let (u, v) = if d == 0 { (bound, c) } else { (c, bound) };
                            sample_geometry(chart, u, v)
                        })
                        .collect();
                    edge_samples[2 * d + side] = Some(row?);
                }
            }
        }

        let mut grid = SurfaceGrid {
            chart_label: chart.label.clone(),
            n,
            h,
            edges,
            active,
            coords,
            samples,
            weights,
            edge_samples,
            hash: String::new(),
        };
        grid.hash = grid.compute_hash();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(iu, iv)`.
    pub fn idx(&self, iu: usize, iv: usize) -> usize {
        iv * self.n[0] + iu
    }

    /// Geometry at the Dirichlet domain edge for face-coefficient
    /// evaluation: direction `d`, side 0 (lo) / 1 (hi), cross index `ic`.
    /// Falls back to `None` for charts that cannot be sampled off their
    /// lattice.
    pub fn edge_sample(&self, d: usize, side: usize, ic: usize) -> Option<&GeometrySample> {
        self.edge_samples[2 * d + side].as_ref().map(|row| &row[ic])
    }

    /// Largest |M| over the grid; used by the slab thickness guard.
    pub fn max_abs_mean_curv(&self) -> f64 {
        self.samples.iter().map(|s| s.mean_curv.abs()).fold(0.0, f64::max)
    }

    fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.chart_label.as_bytes());
        for d in 0..2 {
            hasher.update((self.n[d] as u64).to_le_bytes());
            hasher.update(self.h[d].to_bits().to_le_bytes());
            hasher.update([self.edges[d] as u8]);
        }
        for s in &self.samples {
            for c in s.position.iter() {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..16])
    }
}

/// Transverse extension of a surface grid: `n3` equispaced levels
/// `x3_k = -eps + k h3` (endpoints included) along the transverse
/// coordinate. Note the transverse axis is oriented so that the offset
/// metric `g - 2 x3 K + ...` applies literally, i.e. positive `x3` moves
/// *against* the outward normal; the layer `[-eps, eps]` covers the same
/// physical shell either way.
pub struct SlabGrid {
    pub surface: SurfaceGrid,
    pub eps: f64,
    pub n3: usize,
    pub h3: f64,
    pub x3: Vec<f64>,
    pub hash: String,
}

/// Thin-wall guard: `eps * max|M|` must stay below this.
pub const THIN_WALL_LIMIT: f64 = 0.2;

impl SlabGrid {
    pub fn build(surface: SurfaceGrid, eps: f64, n3: usize) -> Result<SlabGrid> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("slab half-thickness must be positive, got {eps}")));
        }
        if n3 < 4 {
            return Err(Error::GridTooCoarse(format!(
                "slab needs at least 4 transverse levels, got {n3}"
            )));
        }
        let guard = eps * surface.max_abs_mean_curv();
        if guard > THIN_WALL_LIMIT {
            return Err(Error::ThickSlab(format!(
                "eps * max|M| = {guard:.3} exceeds the thin-wall limit {THIN_WALL_LIMIT}"
            )));
        }
        let h3 = 2.0 * eps / (n3 as f64 - 1.0);
        let x3: Vec<f64> = (0..n3).map(|k| -eps + k as f64 * h3).collect();
        // The volume factor must stay positive through the layer,
        // including at the half-levels the fluxes use.
        let mut min_xi = f64::INFINITY;
        for s in &surface.samples {
            for k in 0..(2 * n3 - 1) {
                let x = -eps + 0.5 * k as f64 * h3;
                min_xi = min_xi.min(xi_factor(s, x));
            }
        }
        if !(min_xi > 0.0) {
            return Err(Error::ThickSlab(format!(
                "volume factor reaches {min_xi:.3e} inside the layer"
            )));
        }
        let mut hasher = Sha256::new();
        hasher.update(surface.hash.as_bytes());
        hasher.update(eps.to_bits().to_le_bytes());
        hasher.update((n3 as u64).to_le_bytes());
        let hash = hex::encode(&hasher.finalize()[..16]);
        Ok(SlabGrid { surface, eps, n3, h3, x3, hash })
    }

    pub fn len(&self) -> usize {
        self.surface.len() * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of surface node `s`, level `k`.
    pub fn idx(&self, s: usize, k: usize) -> usize {
        s * self.n3 + k
    }

    /// Transverse trapezoid weights `h3 (1, ..., 1, 1/2 at the ends)` —
    /// no volume factor. The factorized product with the surface weights
    /// is what the Schmidt analysis uses.
    pub fn transverse_weights(&self) -> Vec<f64> {
        (0..self.n3)
            .map(|k| if k == 0 || k == self.n3 - 1 { 0.5 * self.h3 } else { self.h3 })
            .collect()
    }

    /// Full slab measure `sqrt(det g) xi h_u h_v h3` with trapezoid ends:
    /// the inner-product weights of the slab operator.
    pub fn weights(&self) -> Vec<f64> {
        let t = self.transverse_weights();
        let mut w = Vec::with_capacity(self.len());
        for s in 0..self.surface.len() {
            let ws = self.surface.weights[s];
            let sample = &self.surface.samples[s];
            for (k, tk) in t.iter().enumerate() {
                w.push(ws * xi_factor(sample, self.x3[k]) * tk);
            }
        }
        w
    }
}
