//! Surface charts: maps `(u, v) -> R^3` with second-order jets.
//!
//! Three evaluation modes share one interface:
//! * analytic closures that supply their own derivatives,
//! * plain position closures differentiated by high-order finite
//!   differences in parameter space,
//! * tabulated charts on a regular parameter lattice (loaded from CSV),
//!   differentiated on the lattice.

use std::sync::Arc;

use nalgebra::Vector3;

use crate::err::{Error, Result};

/// Relative finite-difference step (fraction of the domain span per
/// direction) used when a chart does not provide analytic derivatives.
pub const FD_STEP_REL: f64 = 1e-4;

/// Position map type.
pub type PosFn = Arc<dyn Fn(f64, f64) -> Vector3<f64> + Send + Sync>;
/// Analytic jet type.
pub type JetFn = Arc<dyn Fn(f64, f64) -> ChartJet + Send + Sync>;

/// Second-order jet of the chart at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct ChartJet {
    pub x: Vector3<f64>,
    pub xu: Vector3<f64>,
    pub xv: Vector3<f64>,
    pub xuu: Vector3<f64>,
    pub xuv: Vector3<f64>,
    pub xvv: Vector3<f64>,
}

/// Tabulated chart data on a regular parameter lattice.
#[derive(Debug, Clone)]
pub struct ChartTable {
    pub n_u: usize,
    pub n_v: usize,
    pub u0: f64,
    pub v0: f64,
    pub du: f64,
    pub dv: f64,
    /// Row-major: index `iv * n_u + iu`.
    pub points: Vec<Vector3<f64>>,
}

#[derive(Clone)]
enum ChartData {
    Closure { pos: PosFn, jet: Option<JetFn> },
    Table(ChartTable),
}

/// A parametrized surface patch.
#[derive(Clone)]
pub struct SurfaceChart {
    data: ChartData,
    /// `[[u_lo, u_hi], [v_lo, v_hi]]`.
    pub domain: [[f64; 2]; 2],
    /// Whether the chart closes up in each parameter direction.
    pub periodic: [bool; 2],
    /// Human-readable identifier, recorded in run metadata.
    pub label: String,
}

impl SurfaceChart {
    /// Chart from a position closure and an analytic jet closure.
    pub fn analytic(
        label: impl Into<String>,
        domain: [[f64; 2]; 2],
        periodic: [bool; 2],
        pos: PosFn,
        jet: JetFn,
    ) -> Self {
        SurfaceChart {
            data: ChartData::Closure { pos, jet: Some(jet) },
            domain,
            periodic,
            label: label.into(),
        }
    }

    /// Chart from a position closure only; derivatives come from finite
    /// differences with step [`FD_STEP_REL`] times the domain span. The
    /// closure must tolerate evaluation slightly outside the domain.
    pub fn from_position(
        label: impl Into<String>,
        domain: [[f64; 2]; 2],
        periodic: [bool; 2],
        pos: PosFn,
    ) -> Self {
        SurfaceChart {
            data: ChartData::Closure { pos, jet: None },
            domain,
            periodic,
            label: label.into(),
        }
    }

    /// Tabulated chart. Fails if the lattice is smaller than 4 nodes in
    /// either direction (the edge stencils need them).
    pub fn from_table(
        label: impl Into<String>,
        table: ChartTable,
        periodic: [bool; 2],
    ) -> Result<Self> {
        if table.n_u < 4 || table.n_v < 4 {
            return Err(Error::GridTooCoarse(format!(
                "tabulated chart needs at least 4x4 nodes, got {}x{}",
                table.n_u, table.n_v
            )));
        }
        if table.points.len() != table.n_u * table.n_v {
            return Err(Error::ShapeMismatch(format!(
                "table holds {} points for a {}x{} lattice",
                table.points.len(),
                table.n_u,
                table.n_v
            )));
        }
        if !(table.du > 0.0) || !(table.dv > 0.0) {
            return Err(Error::Config("table lattice spacing must be positive".into()));
        }
        // A periodic direction stores one period without the duplicate
        // closing node, so its span is n*h rather than (n-1)*h.
        let ext = |n: usize, h: f64, per: bool| {
            if per { n as f64 * h } else { (n as f64 - 1.0) * h }
        };
        let domain = [
            [table.u0, table.u0 + ext(table.n_u, table.du, periodic[0])],
            [table.v0, table.v0 + ext(table.n_v, table.dv, periodic[1])],
        ];
        Ok(SurfaceChart {
            data: ChartData::Table(table),
            domain,
            periodic,
            label: label.into(),
        })
    }

    /// Drop the analytic jet so derivatives are recomputed by finite
    /// differences. Used to cross-check analytic derivative code.
    pub fn with_fd_derivatives(self) -> Self {
        match self.data {
            ChartData::Closure { pos, .. } => SurfaceChart {
                data: ChartData::Closure { pos, jet: None },
                ..self
            },
            other => SurfaceChart { data: other, ..self },
        }
    }

    /// True when second derivatives come from an analytic closure.
    pub fn has_analytic_jet(&self) -> bool {
        matches!(&self.data, ChartData::Closure { jet: Some(_), .. })
    }

    /// True for tabulated charts (which can only be sampled on their
    /// lattice).
    pub fn is_table(&self) -> bool {
        matches!(&self.data, ChartData::Table(_))
    }

    /// Lattice of a tabulated chart, if any.
    pub fn table(&self) -> Option<&ChartTable> {
        match &self.data {
            ChartData::Table(t) => Some(t),
            _ => None,
        }
    }

    /// Domain extent along direction `dir` (0 = u, 1 = v).
    pub fn span(&self, dir: usize) -> f64 {
        self.domain[dir][1] - self.domain[dir][0]
    }

    /// Position at `(u, v)`. Tabulated charts accept only lattice nodes
    /// (within a small snapping tolerance).
    pub fn position(&self, u: f64, v: f64) -> Result<Vector3<f64>> {
        match &self.data {
            ChartData::Closure { pos, .. } => Ok(pos(u, v)),
            ChartData::Table(t) => {
                let (iu, iv) = t.locate(u, v, self.periodic)?;
                Ok(t.at(iu as i64, iv as i64, self.periodic))
            }
        }
    }

    /// Second-order jet at `(u, v)`.
    pub fn jet(&self, u: f64, v: f64) -> Result<ChartJet> {
        match &self.data {
            ChartData::Closure { jet: Some(j), .. } => Ok(j(u, v)),
            ChartData::Closure { pos, jet: None } => Ok(self.fd_jet(pos, u, v)),
            ChartData::Table(t) => {
                let (iu, iv) = t.locate(u, v, self.periodic)?;
                Ok(t.lattice_jet(iu, iv, self.periodic))
            }
        }
    }

    /// Fourth-order central differences on the position closure.
    fn fd_jet(&self, pos: &PosFn, u: f64, v: f64) -> ChartJet {
        let hu = FD_STEP_REL * self.span(0);
        let hv = FD_STEP_REL * self.span(1);
        let p = |du: f64, dv: f64| pos(u + du, v + dv);

        let d1 = |f: &dyn Fn(f64) -> Vector3<f64>, h: f64| {
            (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
        };
        let d2 = |f: &dyn Fn(f64) -> Vector3<f64>, h: f64| {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
                / (12.0 * h * h)
        };

        let xu = d1(&|d| p(d, 0.0), hu);
        let xv = d1(&|d| p(0.0, d), hv);
        let xuu = d2(&|d| p(d, 0.0), hu);
        let xvv = d2(&|d| p(0.0, d), hv);
        // Mixed derivative: u-stencil applied to v-derivatives.
        let dv_at = |du: f64| d1(&|d| p(du, d), hv);
        let xuv = d1(&dv_at, hu);

        ChartJet { x: p(0.0, 0.0), xu, xv, xuu, xuv, xvv }
    }
}

impl ChartTable {
    /// Map parameter values to lattice indices, snapping within `1e-6`
    /// of a node spacing and wrapping periodic directions. Off-lattice
    /// points are an error: tabulated charts carry no information between
    /// nodes.
    fn locate(&self, u: f64, v: f64, periodic: [bool; 2]) -> Result<(usize, usize)> {
        let one = |x: f64, x0: f64, h: f64, n: usize, per: bool| -> Result<usize> {
            let f = (x - x0) / h;
            let i = f.round();
            if (f - i).abs() > 1e-6 {
                return Err(Error::GridMismatch(format!(
                    "tabulated chart sampled off-lattice at parameter {x:.6e}"
                )));
            }
            let i = i as i64;
            if per {
                Ok(i.rem_euclid(n as i64) as usize)
            } else if i >= 0 && (i as usize) < n {
                Ok(i as usize)
            } else {
                Err(Error::GridMismatch(format!(
                    "tabulated chart sampled outside its lattice at parameter {x:.6e}"
                )))
            }
        };
        Ok((
            one(u, self.u0, self.du, self.n_u, periodic[0])?,
            one(v, self.v0, self.dv, self.n_v, periodic[1])?,
        ))
    }

    /// Node fetch with periodic wrapping; non-periodic indices must be in
    /// range (guaranteed by the stencil selection below).
    fn at(&self, iu: i64, iv: i64, periodic: [bool; 2]) -> Vector3<f64> {
        let wrap = |i: i64, n: usize, per: bool| -> usize {
            let n = n as i64;
            if per {
                (i.rem_euclid(n)) as usize
            } else {
                debug_assert!(i >= 0 && i < n, "lattice stencil out of range");
                i.clamp(0, n - 1) as usize
            }
        };
        // For periodic directions the last lattice column duplicates data
        // only implicitly: u0 + n*du is the period, so index wraps mod n.
        let iu = wrap(iu, self.n_u, periodic[0]);
        let iv = wrap(iv, self.n_v, periodic[1]);
        self.points[iv * self.n_u + iu]
    }

    fn lattice_jet(&self, iu: usize, iv: usize, periodic: [bool; 2]) -> ChartJet {
        let row_u = |k: i64| self.at(iu as i64 + k, iv as i64, periodic);
        let row_v = |k: i64| self.at(iu as i64, iv as i64 + k, periodic);

        let xu = lattice_d1(&row_u, iu, self.n_u, periodic[0], self.du);
        let xv = lattice_d1(&row_v, iv, self.n_v, periodic[1], self.dv);
        let xuu = lattice_d2(&row_u, iu, self.n_u, periodic[0], self.du);
        let xvv = lattice_d2(&row_v, iv, self.n_v, periodic[1], self.dv);
        // Mixed: v-derivative evaluated on the u-stencil nodes.
        let dv_at = |k: i64| {
            let col = |m: i64| self.at(iu as i64 + k, iv as i64 + m, periodic);
            lattice_d1(&col, iv, self.n_v, periodic[1], self.dv)
        };
        let xuv = lattice_d1(&dv_at, iu, self.n_u, periodic[0], self.du);

        ChartJet { x: self.at(iu as i64, iv as i64, periodic), xu, xv, xuu, xuv, xvv }
    }
}

/// First derivative on a lattice row: fourth-order central where the
/// stencil fits (always, for periodic rows), second-order central one node
/// from the edge, second-order one-sided at the edge.
fn lattice_d1(
    f: &dyn Fn(i64) -> Vector3<f64>,
    i: usize,
    n: usize,
    periodic: bool,
    h: f64,
) -> Vector3<f64> {
    let i = i as i64;
    let n = n as i64;
    if periodic || (i >= 2 && i <= n - 3) {
        (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h)
    } else if i >= 1 && i <= n - 2 {
        (f(1) - f(-1)) / (2.0 * h)
    } else if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else {
        (3.0 * f(0) - 4.0 * f(-1) + f(-2)) / (2.0 * h)
    }
}

/// Second derivative on a lattice row, same stencil ladder as
/// [`lattice_d1`].
fn lattice_d2(
    f: &dyn Fn(i64) -> Vector3<f64>,
    i: usize,
    n: usize,
    periodic: bool,
    h: f64,
) -> Vector3<f64> {
    let i = i as i64;
    let n = n as i64;
    let h2 = h * h;
    if periodic || (i >= 2 && i <= n - 3) {
        (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h2)
    } else if i >= 1 && i <= n - 2 {
        (f(1) - 2.0 * f(0) + f(-1)) / h2
    } else if i == 0 {
        (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
    } else {
        (2.0 * f(0) - 5.0 * f(-1) + 4.0 * f(-2) - f(-3)) / h2
    }
}
