//! Claim-level diagnostics over spectra and eigenvectors:
//! separability (Schmidt ratio of slab states), naive-vs-variational
//! spectrum comparison, field-derivative probes, and Hermiticity
//! measurement.

use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{DiscreteOperator, SlabGrid};
use crate::em::VectorPotentialField;
use crate::err::{Error, Result};
use crate::solve::{solve_lowest, SolverConfig, SpectrumResult};

type C = Complex64;

/// Eigenvalues with imaginary parts above this are flagged complex.
const IM_FLAG: f64 = 1e-8;
/// Minimal acceptable overlap for eigenpair tracking across a
/// parameter change.
const TRACK_OVERLAP: f64 = 0.7;

/// Singular-value summary of a slab state reshaped to
/// surface x transverse.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtReport {
    /// Largest singular values, descending.
    pub singular_values: Vec<f64>,
    /// `sigma_2 / sigma_1`; zero for an exactly separable product.
    pub separability_index: f64,
    pub bipartition: String,
}

/// Schmidt spectrum of a slab eigenvector across the
/// surface ⊗ transverse split.
///
/// The state is reshaped to an `n_surface x n3` matrix and scaled
/// symmetrically by the square roots of the factorized measure: the
/// surface weights on rows, the bare transverse trapezoid weights on
/// columns. The `xi` part of the volume element is deliberately left
/// out — it is not a product over the bipartition, and including it
/// would make even manufactured product states appear entangled. All
/// separability baselines are measured with the same convention.
pub fn schmidt_spectrum(
    vector: &[C],
    slab: &SlabGrid,
    n_values: usize,
) -> Result<SchmidtReport> {
    let ns = slab.surface.len();
    let n3 = slab.n3;
    if vector.len() != ns * n3 {
        return Err(Error::ShapeMismatch(format!(
            "state length {} does not match slab {} x {}",
            vector.len(),
            ns,
            n3
        )));
    }
    if n_values == 0 {
        return Err(Error::Config("schmidt_spectrum needs n_values >= 1".into()));
    }
    let t3 = slab.transverse_weights();
    let row_scale: Vec<f64> = slab.surface.weights.iter().map(|w| w.sqrt()).collect();
    let col_scale: Vec<f64> = t3.iter().map(|w| w.sqrt()).collect();

    // Columns of the weighted reshape (one per transverse level).
    let mut cols: Vec<Vec<C>> = (0..n3)
        .map(|k| {
            (0..ns)
                .map(|s| vector[slab.idx(s, k)] * (row_scale[s] * col_scale[k]))
                .collect()
        })
        .collect();
    let mut sigma = jacobi_singular_values(&mut cols)?;
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if !(sigma[0] > 0.0) {
        return Err(Error::Config("schmidt_spectrum needs a nonzero state".into()));
    }
    let index = sigma[1] / sigma[0];
    sigma.truncate(n_values.min(sigma.len()));
    Ok(SchmidtReport {
        singular_values: sigma,
        separability_index: index,
        bipartition: "surface ⊗ transverse".into(),
    })
}

/// One-sided Jacobi: orthogonalize the columns in place and return
/// their norms (the singular values).
fn jacobi_singular_values(cols: &mut [Vec<C>]) -> Result<Vec<f64>> {
    let nc = cols.len();
    let inner = |a: &[C], b: &[C]| -> C {
        let mut acc = C::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x.conj() * y;
        }
        acc
    };
    for _sweep in 0..60 {
        let mut rotated = false;
        // Columns annihilated by earlier rotations keep O(eps) residue;
        // measured against the pair alone they would never pass the
        // convergence test, so compare against the global scale too.
        let global = cols
            .iter()
            .map(|col| col.iter().map(|x| x.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max);
        for p in 0..nc {
            for q in p + 1..nc {
                let app = cols[p].iter().map(|x| x.norm_sqr()).sum::<f64>();
                let aqq = cols[q].iter().map(|x| x.norm_sqr()).sum::<f64>();
                if app <= 1e-30 * global || aqq <= 1e-30 * global {
                    continue;
                }
                let apq = inner(&cols[p], &cols[q]);
                let g = apq.norm();
                if g <= 1e-15 * (app * aqq).sqrt() || g <= 1e-30 * global {
                    continue;
                }
                rotated = true;
                // Absorb the phase into column q, then rotate as in the
                // real symmetric 2x2 case.
                let phase = apq / g;
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..cols[p].len() {
                    let u = cols[p][i];
                    let v = cols[q][i] * phase.conj();
                    cols[p][i] = c * u - s * v;
                    cols[q][i] = s * u + c * v;
                }
            }
        }
        if !rotated {
            let norms = cols
                .iter()
                .map(|col| col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
                .collect();
            return Ok(norms);
        }
    }
    Err(Error::Numerical("Jacobi SVD did not converge in 60 sweeps".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub naive: C,
    pub variational: C,
    /// `|naive - variational|`.
    pub diff: f64,
}

/// Paired spectrum table for the two reduced variants.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// Aligned by sorted real parts (stable tie order from the solver).
    pub rows: Vec<ComparisonRow>,
    pub max_im_naive: f64,
    pub max_im_variational: f64,
    pub hermiticity_naive: f64,
    pub hermiticity_variational: f64,
    /// Any `|Im lambda| > 1e-8` in the respective column.
    pub naive_complex: bool,
    pub variational_complex: bool,
    /// `|diagonal|` profile of the anomalous difference operator,
    /// when it was computed.
    pub anomalous_profile: Option<Vec<f64>>,
}

impl ComparisonReport {
    /// Attach the per-node magnitude of the anomalous diagonal.
    pub fn with_anomalous_profile(mut self, delta: &DiscreteOperator) -> Self {
        let n = delta.dim();
        self.anomalous_profile = Some((0..n).map(|i| delta.matrix.get(i, i).norm()).collect());
        self
    }
}

/// Align and contrast the naive and variational spectra solved on the
/// same grid, particle and field.
pub fn compare_variants(
    naive: &SpectrumResult,
    variational: &SpectrumResult,
) -> Result<ComparisonReport> {
    if naive.meta.variant != "naive" || variational.meta.variant != "variational" {
        return Err(Error::MetadataMismatch(format!(
            "compare_variants needs (naive, variational), got ({}, {})",
            naive.meta.variant, variational.meta.variant
        )));
    }
    naive.meta.comparable(&variational.meta)?;
    if naive.eigenvalues.len() != variational.eigenvalues.len() {
        return Err(Error::MetadataMismatch(format!(
            "eigenvalue counts differ: {} vs {}",
            naive.eigenvalues.len(),
            variational.eigenvalues.len()
        )));
    }
    let rows: Vec<ComparisonRow> = naive
        .eigenvalues
        .iter()
        .zip(&variational.eigenvalues)
        .map(|(&a, &b)| ComparisonRow { naive: a, variational: b, diff: (a - b).norm() })
        .collect();
    let max_im = |vals: &[C]| vals.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    let max_im_naive = max_im(&naive.eigenvalues);
    let max_im_variational = max_im(&variational.eigenvalues);
    Ok(ComparisonReport {
        rows,
        max_im_naive,
        max_im_variational,
        hermiticity_naive: naive.hermiticity_defect,
        hermiticity_variational: variational.hermiticity_defect,
        naive_complex: max_im_naive > IM_FLAG,
        variational_complex: max_im_variational > IM_FLAG,
        anomalous_profile: None,
    })
}

/// Central-difference derivative of the `k` lowest eigenvalue real
/// parts with respect to a field-family parameter, with eigenpair
/// tracking by maximal weighted overlap. The discrete analogue of an
/// orbital magnetic moment readout.
pub fn field_derivative_probe<A, F>(
    assemble: A,
    family: F,
    s0: f64,
    ds: f64,
    k: usize,
    solver: &SolverConfig,
) -> Result<Vec<f64>>
where
    A: Fn(&VectorPotentialField) -> Result<DiscreteOperator>,
    F: Fn(f64) -> VectorPotentialField,
{
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::Config(format!("probe step must be positive, got {ds}")));
    }
    let mut cfg = solver.clone();
    cfg.k = k;
    let op_minus = assemble(&family(s0 - ds))?;
    let op_plus = assemble(&family(s0 + ds))?;
    let res_minus = solve_lowest(&op_minus, &cfg)?;
    res_minus.require_converged()?;
    let res_plus = solve_lowest(&op_plus, &cfg)?;
    res_plus.require_converged()?;

    // Greedy overlap matching from the minus side to the plus side.
    let mut taken = vec![false; k];
    let mut derivatives = Vec::with_capacity(k);
    for i in 0..k {
        let vi = &res_minus.eigenvectors[i];
        let mut best = (0usize, -1.0f64);
        for (j, tj) in taken.iter().enumerate() {
            if *tj {
                continue;
            }
            let ov = op_minus.w_inner(vi, &res_plus.eigenvectors[j]).norm();
            if ov > best.1 {
                best = (j, ov);
            }
        }
        if best.1 < TRACK_OVERLAP {
            return Err(Error::DegenerateTracking(format!(
                "state {i} has best overlap {:.3} < {TRACK_OVERLAP}; \
                 reduce ds or break the degeneracy",
                best.1
            )));
        }
        taken[best.0] = true;
        let dl = res_plus.eigenvalues[best.0].re - res_minus.eigenvalues[i].re;
        derivatives.push(dl / (2.0 * ds));
    }
    Ok(derivatives)
}

/// Measured w-Hermiticity defect of an assembled operator (max-norm of
/// the anti-Hermitian part in the measure-weighted metric).
pub fn hermiticity_residual(op: &DiscreteOperator) -> f64 {
    op.hermiticity_residual()
}
