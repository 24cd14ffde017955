//! The assembled Hamiltonian: sparse matrix, inner-product weights and
//! the metadata that makes results comparable and reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::UNITS;

/// Mass and charge of the confined particle (`hbar = 1`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParticleParams {
    pub mass: f64,
    pub charge: f64,
}

impl Default for ParticleParams {
    fn default() -> Self {
        ParticleParams { mass: 1.0, charge: 0.0 }
    }
}

impl ParticleParams {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        if !charge.is_finite() {
            return Err(Error::Config(format!("charge must be finite, got {charge}")));
        }
        Ok(ParticleParams { mass, charge })
    }

    pub fn neutral(mass: f64) -> Result<Self> {
        ParticleParams::new(mass, 0.0)
    }
}

/// Everything needed to decide whether two spectra may be compared, and
/// to reproduce the operator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OperatorMetadata {
    /// "laplace_beltrami" | "naive" | "variational" | "slab3d" | "delta".
    pub variant: String,
    pub mass: f64,
    pub charge: f64,
    /// Weight of the tangential advection term (1.0 unless an
    /// alternative reduction is selected; the naive variant always
    /// uses 1.0).
    pub coef_adv: f64,
    /// Label of the vector potential, "none" without one.
    pub field: String,
    pub chart: String,
    /// "64x64" or "24x48x8".
    pub grid: String,
    pub grid_hash: String,
    pub edges: Vec<String>,
    /// Slab only: boundary condition summary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<String>,
    /// Slab only: half-thickness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// How the divergence entering the `(i q / 2m) div A` diagonal is
    /// evaluated ("ambient_fd" | "none").
    pub div_route: String,
    /// Terms of the continuum operator intentionally not represented.
    pub dropped_terms: Vec<String>,
    pub units: String,
    pub dim: usize,
}

impl OperatorMetadata {
    /// Fields that must agree for two spectra to be comparable. The
    /// variant, advection weight and dropped-term bookkeeping are
    /// allowed to differ — comparing across those is the whole point.
    pub fn comparable(&self, other: &OperatorMetadata) -> Result<()> {
        let mut diffs = Vec::new();
        if self.mass != other.mass {
            diffs.push("mass");
        }
        if self.charge != other.charge {
            diffs.push("charge");
        }
        if self.field != other.field {
            diffs.push("field");
        }
        if self.chart != other.chart {
            diffs.push("chart");
        }
        if self.grid != other.grid {
            diffs.push("grid");
        }
        if self.grid_hash != other.grid_hash {
            diffs.push("grid_hash");
        }
        if self.bc != other.bc {
            diffs.push("bc");
        }
        if self.eps != other.eps {
            diffs.push("eps");
        }
        if self.dim != other.dim {
            diffs.push("dim");
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::MetadataMismatch(format!(
                "results differ in {}",
                diffs.join(", ")
            )))
        }
    }

    pub fn units_default() -> String {
        UNITS.to_string()
    }
}

/// A Hamiltonian discretized on a grid, together with the measure that
/// defines its inner product `<a, b>_w = sum_i w_i conj(a_i) b_i`.
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    pub weights: Vec<f64>,
    pub meta: OperatorMetadata,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    /// Operator scale used in residual and hermiticity contracts.
    pub fn scale(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Weighted inner product, conjugate-linear in the first argument.
    pub fn w_inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        debug_assert_eq!(a.len(), self.weights.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&w, &x), &y) in self.weights.iter().zip(a).zip(b) {
            acc += w * x.conj() * y;
        }
        acc
    }

    /// Weighted norm.
    pub fn w_norm(&self, a: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (&w, &x) in self.weights.iter().zip(a) {
            acc += w * x.norm_sqr();
        }
        acc.sqrt()
    }

    /// Residual `||H v - lambda v||_w / ||v||_w`.
    pub fn residual(&self, v: &[Complex64], lambda: Complex64) -> f64 {
        let hv = self.matrix.apply(v);
        let mut acc = 0.0;
        for i in 0..v.len() {
            acc += self.weights[i] * (hv[i] - lambda * v[i]).norm_sqr();
        }
        acc.sqrt() / self.w_norm(v).max(f64::MIN_POSITIVE)
    }

    /// Largest entry of the anti-Hermitian part in the weighted metric:
    /// `max_ij |H_ij - conj(H_ji) w_j / w_i| / 2`. Zero iff the operator
    /// is self-adjoint under `w_inner`.
    pub fn hermiticity_residual(&self) -> f64 {
        let h = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..h.n {
            let (cols, vals) = h.row(i);
            for (&j, &hij) in cols.iter().zip(vals) {
                let hji = h.get(j, i);
                let defect = 0.5 * (hij - hji.conj() * (self.weights[j] / self.weights[i])).norm();
                worst = worst.max(defect);
            }
        }
        worst
    }
}
