//! Shift-invert eigensolver for assembled operators.
//!
//! The Krylov iteration runs in the measure-weighted inner product of
//! the operator (so Hermitian operators stay Hermitian to the solver)
//! and applies `(H - sigma)^{-1}` through a sparse LU factorization.
//!
//! Converged directions are locked as a partial Schur factorization
//! `H Q ~= Q T` with `Q` w-orthonormal: each cycle orthogonalizes its
//! Krylov basis against `Q` while recording the coupling coefficients
//! into `T`, so locking stays valid for non-normal operators (deflating
//! right eigenvectors alone would leave later candidates with an
//! irreducible residual floor, because eigenvectors of a non-normal
//! operator are not w-orthogonal). Eigenpairs are extracted from `T`
//! at the end and certified against the *original* operator: a pair is
//! reported converged only when `||H v - lambda v||_w <= tol ||H||_max`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteOperator;
use crate::err::{Error, Result};
use crate::sparse::SparseLu;

use super::dense::{dense_eig, eigvec_inverse_iteration, DenseMatrix};

type C = Complex64;

/// Relative w-Hermiticity defect below which the operator is treated
/// as self-adjoint (eigenvalues reported real).
const HERMITIAN_DETECT: f64 = 1e-12;
/// Relative cluster gap for degenerate-group bookkeeping.
const CLUSTER_GAP: f64 = 1e-6;
/// Dimension at or below which the dense path is always taken.
const DENSE_CUTOFF: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Number of eigenpairs wanted (nearest the shift).
    pub k: usize,
    /// Spectral shift; pick it below the spectrum to get the bottom.
    pub shift: C,
    /// Relative residual tolerance (scaled by the largest entry of H).
    pub tol: f64,
    /// Budget of inverse applications.
    pub max_iter: usize,
    /// Krylov subspace dimension per cycle; 0 = automatic.
    pub restart: usize,
    /// Seed for the start vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 6,
            shift: C::new(-0.1, 0.0),
            tol: 1e-8,
            max_iter: 4000,
            restart: 0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C>,
    /// `||H v - lambda v||_w / ||v||_w` per pair, against the sparse operator.
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    /// Indices grouped by eigenvalue clusters (degeneracy bookkeeping).
    pub clusters: Vec<Vec<usize>>,
    /// Inverse applications (or dense flag-value 0).
    pub iterations: usize,
    pub method: String,
    pub hermitian: bool,
    /// Measured w-Hermiticity defect of the operator (absolute).
    pub hermiticity_defect: f64,
    pub meta: crate::assembly::OperatorMetadata,
    pub config: SolverConfig,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<C>>,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.len() == self.config.k && self.converged.iter().all(|&c| c)
    }

    pub fn require_converged(&self) -> Result<()> {
        if self.all_converged() {
            Ok(())
        } else {
            Err(Error::NotConverged {
                converged: self.converged.iter().filter(|&&c| c).count(),
                requested: self.config.k,
            })
        }
    }
}

struct Pair {
    lambda: C,
    vector: Vec<C>,
    residual: f64,
    converged: bool,
}

/// Solve for the `k` eigenpairs of `op` nearest `config.shift`,
/// returned sorted by `(Re, Im)`. Small problems go through the dense
/// path; otherwise shift-invert Arnoldi (Lanczos when the operator is
/// detected Hermitian) with locking. Non-convergence within the budget
/// is reported through the `converged` flags, not an error.
pub fn solve_lowest(op: &DiscreteOperator, config: &SolverConfig) -> Result<SpectrumResult> {
    let n = op.dim();
    if config.k == 0 {
        return Err(Error::Config("solver needs k >= 1".into()));
    }
    if config.max_iter == 0 {
        return Err(Error::Config("solver needs max_iter >= 1".into()));
    }
    if n < config.k + 2 {
        return Err(Error::Config(format!(
            "operator dimension {n} is too small for k = {} (needs >= k + 2)",
            config.k
        )));
    }
    if !(config.tol > 0.0 && config.tol.is_finite()) {
        return Err(Error::Config(format!("solver tol must be positive, got {}", config.tol)));
    }
    if !(config.shift.re.is_finite() && config.shift.im.is_finite()) {
        return Err(Error::Config("solver shift must be finite".into()));
    }
    let k = config.k;
    let scale = op.scale().max(f64::MIN_POSITIVE);
    let defect = op.hermiticity_residual();
    let hermitian = defect <= HERMITIAN_DETECT * scale;

    if n <= DENSE_CUTOFF || 2 * k + 2 >= n {
        return dense_path(op, config, k, scale, hermitian, defect);
    }

    let restart = if config.restart == 0 {
        (2 * k + 2).max(20).min(n - 1)
    } else {
        config.restart
    };
    if restart < 2 * k + 2 {
        return Err(Error::Config(format!(
            "restart dimension {restart} is too small for k = {k} (needs >= {})",
            2 * k + 2
        )));
    }
    let restart = restart.min(n - 1);

    let mut effective = config.clone();
    effective.restart = restart;
    let lu = factor_shifted(op, &mut effective.shift, scale)?;
    let sigma = effective.shift;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Locked partial Schur factorization: H qs ~= qs * T, with T stored
    // column by column (column j holds entries T[0..=j, j]; below is
    // structurally zero because the locked span is invariant).
    let mut qs: Vec<Vec<C>> = Vec::new();
    let mut tcols: Vec<Vec<C>> = Vec::new();
    let mut lambdas: Vec<C> = Vec::new();
    // Best unconverged Ritz pairs from the most recent cycle; reported
    // (flagged unconverged) if the budget runs out.
    let mut estimates: Vec<Pair> = Vec::new();
    let mut ops_used = 0usize;
    let mut start = random_vector(n, &mut rng);

    // A Krylov space grown from one vector sees one direction per
    // degenerate eigenspace, so a multiplet's further members only
    // appear in later, deflated cycles — possibly after some farther
    // eigenvalue has already converged. Locking by count alone would
    // then stop too early. Instead, cycles continue until one brings
    // nothing new inside the ball spanned by the k nearest locked
    // eigenvalues: no fresh lock inside it, and no unconverged Ritz
    // estimate closer to the shift than its radius.
    let lock_cap = (4 * k + 16).min(n);
    let ball = 1.0 + 1e-6;
    let kth_dist = |lambdas: &[C]| -> f64 {
        if lambdas.len() < k {
            return f64::INFINITY;
        }
        let mut d: Vec<f64> = lambdas.iter().map(|l| (l - sigma).norm()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        d[k - 1]
    };
    // A Schur column locked with invariance residual r contributes about
    // ||H - sigma|| r / |theta| to the final eigenpair residuals, so the
    // per-column budget scales with |theta|. The operator norm is bounded
    // through the stencil row weight (at most 9 entries per row).
    let opnorm = 9.0 * scale + sigma.norm();
    let lock_tol = |theta: C| -> f64 { 0.25 * config.tol * theta.norm() * scale / opnorm };

    while ops_used < config.max_iter {
        // Orthogonalize the start vector against the locked basis.
        orthogonalize(op, &qs, &mut start);
        let mut nrm = op.w_norm(&start);
        if !(nrm > 0.0) || !nrm.is_finite() {
            start = random_vector(n, &mut rng);
            orthogonalize(op, &qs, &mut start);
            nrm = op.w_norm(&start);
            if !(nrm > 0.0) {
                return Err(Error::Numerical("cannot build a deflated start vector".into()));
            }
        }
        for x in start.iter_mut() {
            *x /= nrm;
        }

        // Arnoldi factorization of the inverse operator on the complement
        // of the locked span, recording the coupling back into it:
        //   OP v_j = qs * gcols[j] + V h_j.
        let mut basis: Vec<Vec<C>> = vec![start.clone()];
        let mut hess = DenseMatrix::zeros(restart + 1);
        let mut gcols: Vec<Vec<C>> = Vec::new();
        let mut m_built = 0usize;
        for j in 0..restart {
            if ops_used >= config.max_iter {
                break;
            }
            let mut w = lu.solve(&basis[j]);
            ops_used += 1;
            if w.iter().any(|c| !c.is_finite()) {
                return Err(Error::Numerical("inverse application produced non-finite values".into()));
            }
            let pre = op.w_norm(&w);
            // Two-pass Gram-Schmidt against locked + basis vectors.
            let mut gcol = vec![C::new(0.0, 0.0); qs.len()];
            for _ in 0..2 {
                for (i, qi) in qs.iter().enumerate() {
                    let c = op.w_inner(qi, &w);
                    gcol[i] += c;
                    for (wx, qx) in w.iter_mut().zip(qi) {
                        *wx -= c * qx;
                    }
                }
                for (i, vi) in basis.iter().enumerate() {
                    let c = op.w_inner(vi, &w);
                    hess[(i, j)] += c;
                    for (wx, vx) in w.iter_mut().zip(vi) {
                        *wx -= c * vx;
                    }
                }
            }
            gcols.push(gcol);
            let hnext = op.w_norm(&w);
            m_built = j + 1;
            if hnext <= 1e-12 * pre.max(1.0) {
                // Happy breakdown: the Krylov space is exhausted.
                break;
            }
            hess[(j + 1, j)] = C::new(hnext, 0.0);
            for x in w.iter_mut() {
                *x /= hnext;
            }
            basis.push(w);
        }
        if m_built == 0 {
            break;
        }

        // Rayleigh-Ritz on the built subspace.
        let mut proj = DenseMatrix::zeros(m_built);
        for i in 0..m_built {
            for j in 0..m_built {
                proj[(i, j)] = hess[(i, j)];
            }
        }
        let eig = dense_eig(&proj)?;
        // Nearest-shift first = largest inverse eigenvalue first.
        let mut order: Vec<usize> = (0..m_built).collect();
        order.sort_by(|&a, &b| {
            eig.values[b]
                .norm()
                .partial_cmp(&eig.values[a].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let hlast = hess[(m_built, m_built - 1)].norm();
        let proj_apply = |u: &[C]| -> Vec<C> {
            (0..m_built)
                .map(|i| (0..m_built).map(|j| proj[(i, j)] * u[j]).sum())
                .collect()
        };

        let mut next_start: Option<Vec<C>> = None;
        let mut cycle_estimates: Vec<Pair> = Vec::new();
        let ball_before = kth_dist(&lambdas) * ball;
        let mut locked_inside = false;
        let mut nearest_open = f64::INFINITY;
        let l0 = qs.len();
        // Small-space vectors locked this cycle (euclid-orthonormal).
        let mut new_us: Vec<Vec<C>> = Vec::new();
        for &idx in &order {
            if lambdas.len() >= lock_cap {
                break;
            }
            let theta = eig.values[idx];
            if theta.norm() < 1e-300 {
                continue;
            }
            let lambda = sigma + theta.finv();
            let dist = (lambda - sigma).norm();
            let u = &eig.vectors[idx];
            // Invariance residual of the candidate within the Krylov
            // relation; exact, no extra operator application needed.
            let est = hlast * u[m_built - 1].norm();
            if est <= lock_tol(theta) {
                // Orthogonalize in the small space against the columns
                // already locked this cycle, then append a Schur column.
                let mut uc = u.clone();
                for _ in 0..2 {
                    for prev in &new_us {
                        let c: C = prev.iter().zip(&uc).map(|(a, b)| a.conj() * b).sum();
                        for (x, y) in uc.iter_mut().zip(prev) {
                            *x -= c * y;
                        }
                    }
                }
                let nrm = uc.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if nrm < 1e-6 {
                    // Direction already captured by this cycle's locks.
                    continue;
                }
                for x in uc.iter_mut() {
                    *x /= nrm;
                }
                let hu = proj_apply(&uc);
                let mut tcol: Vec<C> = Vec::with_capacity(l0 + new_us.len() + 1);
                for i in 0..l0 {
                    tcol.push((0..m_built).map(|j| gcols[j][i] * uc[j]).sum());
                }
                for prev in &new_us {
                    tcol.push(prev.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum());
                }
                let diag: C = uc.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
                tcol.push(diag);
                let mut q = vec![C::new(0.0, 0.0); n];
                for (j, vj) in basis.iter().take(m_built).enumerate() {
                    let yj = uc[j];
                    if yj != C::new(0.0, 0.0) {
                        for (qi, vi) in q.iter_mut().zip(vj) {
                            *qi += yj * vi;
                        }
                    }
                }
                orthogonalize(op, &qs, &mut q);
                let qn = op.w_norm(&q);
                if !(qn > 1e-300) {
                    continue;
                }
                for x in q.iter_mut() {
                    *x /= qn;
                }
                if diag.norm() < 1e-300 {
                    continue;
                }
                locked_inside |= dist <= ball_before;
                lambdas.push(sigma + diag.finv());
                qs.push(q);
                tcols.push(tcol);
                new_us.push(uc);
            } else {
                nearest_open = nearest_open.min(dist);
                let want_estimate = cycle_estimates.len() + lambdas.len() < k + 1;
                if next_start.is_none() || want_estimate {
                    let mut x = vec![C::new(0.0, 0.0); n];
                    for (j, vj) in basis.iter().take(m_built).enumerate() {
                        let yj = eig.vectors[idx][j];
                        if yj != C::new(0.0, 0.0) {
                            for (xi, vi) in x.iter_mut().zip(vj) {
                                *xi += yj * vi;
                            }
                        }
                    }
                    let nrm = op.w_norm(&x);
                    if !(nrm > 1e-300) {
                        continue;
                    }
                    for xi in x.iter_mut() {
                        *xi /= nrm;
                    }
                    if next_start.is_none() {
                        next_start = Some(x.clone());
                    }
                    if want_estimate {
                        let res = op.residual(&x, lambda);
                        cycle_estimates.push(Pair { lambda, vector: x, residual: res, converged: false });
                    }
                }
            }
        }
        if !cycle_estimates.is_empty() {
            estimates = cycle_estimates;
        }
        if lambdas.len() >= k && !locked_inside && nearest_open > kth_dist(&lambdas) * ball {
            break;
        }
        match next_start {
            Some(v) => start = v,
            None => start = random_vector(n, &mut rng),
        }
    }

    // Extract eigenpairs of the locked factorization from the small
    // coupling matrix, certify each against the sparse operator, keep
    // the k nearest the shift, then top up with the best current
    // (unconverged) estimates if the budget ran out early.
    let mut pairs: Vec<Pair> = Vec::new();
    if !qs.is_empty() {
        let l = qs.len();
        let mut tmat = DenseMatrix::zeros(l);
        for (j, col) in tcols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                tmat[(i, j)] = *v;
            }
        }
        let te = dense_eig(&tmat)?;
        let mut cvecs: Vec<Vec<C>> = Vec::with_capacity(l);
        for (i, &theta) in te.values.iter().enumerate() {
            cvecs.push(eigvec_inverse_iteration(&tmat, theta, config.seed ^ (i as u64) << 8));
        }
        // Orthonormalize within degenerate clusters so multiplet members
        // come out independent (any basis of the eigenspace is fine).
        let tscale = te.values.iter().fold(1.0f64, |a, v| a.max(v.norm()));
        for i in 0..l {
            for j in 0..i {
                if (te.values[i] - te.values[j]).norm() <= 1e-8 * tscale {
                    let (head, tail) = cvecs.split_at_mut(i);
                    let prev = &head[j];
                    let cur = &mut tail[0];
                    let c: C = prev.iter().zip(cur.iter()).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in cur.iter_mut().zip(prev) {
                        *x -= c * y;
                    }
                }
            }
            let nrm = cvecs[i].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 1e-300 {
                for x in cvecs[i].iter_mut() {
                    *x /= nrm;
                }
            }
        }
        for (i, &theta) in te.values.iter().enumerate() {
            if theta.norm() < 1e-300 {
                continue;
            }
            let lambda = sigma + theta.finv();
            let mut y = vec![C::new(0.0, 0.0); n];
            for (j, qj) in qs.iter().enumerate() {
                let cj = cvecs[i][j];
                if cj != C::new(0.0, 0.0) {
                    for (yi, qx) in y.iter_mut().zip(qj) {
                        *yi += cj * qx;
                    }
                }
            }
            let nrm = op.w_norm(&y);
            if !(nrm > 1e-300) {
                continue;
            }
            for x in y.iter_mut() {
                *x /= nrm;
            }
            let res = op.residual(&y, lambda);
            pairs.push(Pair { lambda, vector: y, residual: res, converged: res <= config.tol * scale });
        }
    }
    pairs.sort_by(|a, b| {
        (a.lambda - sigma)
            .norm()
            .partial_cmp(&(b.lambda - sigma).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pairs.truncate(k);
    for p in estimates {
        if pairs.len() >= k {
            break;
        }
        pairs.push(p);
    }
    finalize(op, pairs, k, hermitian, defect, ops_used, &effective, if hermitian {
        "shift-invert-lanczos"
    } else {
        "shift-invert-arnoldi"
    })
}

/// Force the dense full-spectrum path regardless of dimension. The
/// reference oracle for cross-checking the iterative solver; cost grows
/// with the cube of the dimension, so keep it to verification grids.
pub fn solve_dense(op: &DiscreteOperator, config: &SolverConfig) -> Result<SpectrumResult> {
    let n = op.dim();
    if config.k == 0 {
        return Err(Error::Config("solver needs k >= 1".into()));
    }
    if n < config.k + 2 {
        return Err(Error::Config(format!(
            "operator dimension {n} is too small for k = {} (needs >= k + 2)",
            config.k
        )));
    }
    let scale = op.scale().max(f64::MIN_POSITIVE);
    let defect = op.hermiticity_residual();
    let hermitian = defect <= HERMITIAN_DETECT * scale;
    dense_path(op, config, config.k, scale, hermitian, defect)
}

fn dense_path(
    op: &DiscreteOperator,
    config: &SolverConfig,
    k: usize,
    scale: f64,
    hermitian: bool,
    defect: f64,
) -> Result<SpectrumResult> {
    let n = op.dim();
    let a = DenseMatrix::from_rows(n, op.matrix.to_dense());
    let eig = dense_eig(&a)?;
    let sigma = config.shift;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let di = (eig.values[i] - sigma).norm();
        let dj = (eig.values[j] - sigma).norm();
        di.partial_cmp(&dj).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut pairs = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v = eig.vectors[idx].clone();
        let nrm = op.w_norm(&v);
        if nrm > 0.0 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
        }
        let lambda = eig.values[idx];
        let res = op.residual(&v, lambda);
        pairs.push(Pair { lambda, vector: v, residual: res, converged: res <= config.tol * scale });
    }
    let mut effective = config.clone();
    effective.k = k;
    finalize(op, pairs, k, hermitian, defect, 0, &effective, "dense")
}

#[allow(clippy::too_many_arguments)]
fn finalize(
    op: &DiscreteOperator,
    mut pairs: Vec<Pair>,
    k: usize,
    hermitian: bool,
    hermiticity_defect: f64,
    iterations: usize,
    config: &SolverConfig,
    method: &str,
) -> Result<SpectrumResult> {
    if hermitian {
        for p in pairs.iter_mut() {
            p.lambda = C::new(p.lambda.re, 0.0);
        }
    }
    pairs.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pairs.truncate(k);
    let eigenvalues: Vec<C> = pairs.iter().map(|p| p.lambda).collect();
    let clusters = cluster_indices(&eigenvalues);
    Ok(SpectrumResult {
        residuals: pairs.iter().map(|p| p.residual).collect(),
        converged: pairs.iter().map(|p| p.converged).collect(),
        clusters,
        iterations,
        method: method.into(),
        hermitian,
        hermiticity_defect,
        meta: op.meta.clone(),
        config: config.clone(),
        eigenvectors: pairs.into_iter().map(|p| p.vector).collect(),
        eigenvalues,
    })
}

/// Group already-sorted eigenvalues into near-degenerate clusters.
fn cluster_indices(values: &[C]) -> Vec<Vec<usize>> {
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.norm()));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(group) if (v - values[group[0]]).norm() <= CLUSTER_GAP * scale => {
                group.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

fn factor_shifted(op: &DiscreteOperator, shift: &mut C, scale: f64) -> Result<SparseLu> {
    let mut sigma = *shift;
    for attempt in 0..3 {
        let shifted = op.matrix.shifted(sigma);
        match SparseLu::factor(&shifted) {
            Ok(lu) => {
                *shift = sigma;
                return Ok(lu);
            }
            Err(Error::SingularShift(_)) if attempt < 2 => {
                // Exact hit on an eigenvalue: nudge and refactor.
                sigma.re -= (1e-8 * scale).max(1e-12);
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop either returns the factorization or propagates the error")
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    (0..n).map(|_| C::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect()
}

/// Orthogonalize `v` against a w-orthonormal set (two passes).
fn orthogonalize(op: &DiscreteOperator, qs: &[Vec<C>], v: &mut [C]) {
    if qs.is_empty() {
        return;
    }
    for _ in 0..2 {
        for q in qs {
            let c = op.w_inner(q, v);
            if c != C::new(0.0, 0.0) {
                for (vx, qx) in v.iter_mut().zip(q) {
                    *vx -= c * qx;
                }
            }
        }
    }
}
