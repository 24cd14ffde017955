//! Dense complex eigensolver: Householder reduction to Hessenberg form,
//! explicit shifted QR with Wilkinson and exceptional shifts, eigenvectors
//! by back-substitution on the triangular factor.
//!
//! Used as the verification path for the iterative solver (and as the
//! small-matrix path inside it), so it is deliberately plain and
//! self-contained.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::err::{Error, Result};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

const ZERO: C = C::new(0.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(1.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<C>) -> Self {
        assert_eq!(data.len(), n * n);
        DenseMatrix { n, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting, for small auxiliary systems.
pub(crate) struct DenseLu {
    a: DenseMatrix,
    piv: Vec<usize>,
}

pub(crate) fn dense_lu(mut a: DenseMatrix) -> Option<DenseLu> {
    let n = a.n;
    let mut piv = vec![0usize; n];
    for col in 0..n {
        let mut p = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > 0.0) {
            return None;
        }
        piv[col] = p;
        if p != col {
            for j in 0..n {
                a.data.swap(col * n + j, p * n + j);
            }
        }
        let d = a[(col, col)];
        for r in (col + 1)..n {
            let f = a[(r, col)] / d;
            a[(r, col)] = f;
            for j in (col + 1)..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
        }
    }
    Some(DenseLu { a, piv })
}

impl DenseLu {
    pub(crate) fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.a.n;
        let mut x = b.to_vec();
        for i in 0..n {
            x.swap(i, self.piv[i]);
            for j in 0..i {
                let f = self.a[(i, j)] * x[j];
                x[i] -= f;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let f = self.a[(i, j)] * x[j];
                x[i] -= f;
            }
            x[i] /= self.a[(i, i)];
        }
        x
    }
}

/// Eigenvector of `t` for the (Schur-accurate) eigenvalue `theta`, by
/// shifted inverse iteration. Unlike back-substitution on the triangular
/// factor this stays reliable for repeated eigenvalues: a fresh random
/// start and an independent tiny jitter per call land on independent
/// members of a degenerate eigenspace.
pub(crate) fn eigvec_inverse_iteration(t: &DenseMatrix, theta: C, seed: u64) -> Vec<C> {
    let n = t.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    let mut x: Vec<C> = (0..n)
        .map(|_| C::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    normalize(&mut x);
    for attempt in 0..4 {
        let eps = tnorm * 1e-13 * 10f64.powi(attempt);
        let jitter = C::new(eps * rng.gen_range(0.5..1.5), eps * rng.gen_range(0.5..1.5));
        let shift = theta + jitter;
        let mut a = t.clone();
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        if let Some(lu) = dense_lu(a) {
            let mut ok = true;
            for _ in 0..2 {
                let y = lu.solve(&x);
                if y.iter().any(|z| !z.is_finite()) {
                    ok = false;
                    break;
                }
                let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !(nrm > 0.0) {
                    ok = false;
                    break;
                }
                x = y;
                for z in x.iter_mut() {
                    *z /= nrm;
                }
            }
            if ok {
                return x;
            }
        }
    }
    x
}

fn normalize(x: &mut [C]) {
    let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for z in x.iter_mut() {
            *z /= nrm;
        }
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with real `c`,
/// chosen so that `G^H [a; b] = [r; 0]`.
fn givens(a: C, b: C) -> (f64, C) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, -b.conj() / bn);
    }
    let r = an.hypot(bn);
    let cc = an / r;
    (cc, -(cc) * b.conj() / a.conj())
}

/// Reduce `a` to upper Hessenberg form by unitary similarity,
/// accumulating the transformation into `q` (so `A_in = Q H Q^H`).
fn hessenberg(a: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = a.n;
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal.
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += a[(i, k)].norm_sqr();
        }
        let x0 = a[(k + 1, k)];
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if x0.norm() == 0.0 { c(1.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        // v = x - alpha e1, normalized.
        let mut v = vec![ZERO; n - k - 1];
        v[0] = x0 - alpha;
        for i in (k + 2)..n {
            v[i - k - 1] = a[(i, k)];
        }
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        // A <- (I - 2 v v^H) A : rows k+1..n
        for col in 0..n {
            let mut dot = ZERO;
            for i in (k + 1)..n {
                dot += v[i - k - 1].conj() * a[(i, col)];
            }
            let dot = dot * 2.0;
            for i in (k + 1)..n {
                let vi = v[i - k - 1];
                a[(i, col)] -= vi * dot;
            }
        }
        // A <- A (I - 2 v v^H) : cols k+1..n
        for row in 0..n {
            let mut dot = ZERO;
            for j in (k + 1)..n {
                dot += a[(row, j)] * v[j - k - 1];
            }
            let dot = dot * 2.0;
            for j in (k + 1)..n {
                a[(row, j)] -= dot * v[j - k - 1].conj();
            }
        }
        // Q <- Q (I - 2 v v^H)
        for row in 0..n {
            let mut dot = ZERO;
            for j in (k + 1)..n {
                dot += q[(row, j)] * v[j - k - 1];
            }
            let dot = dot * 2.0;
            for j in (k + 1)..n {
                q[(row, j)] -= dot * v[j - k - 1].conj();
            }
        }
        // Enforce the exact zeros.
        a[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Wilkinson shift: eigenvalue of the trailing 2x2 block closest to the
/// bottom-right entry.
fn wilkinson(h: &DenseMatrix, hi: usize) -> C {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let cc = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr2 = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * cc;
    let root = disc.sqrt();
    let l1 = tr2 + root;
    let l2 = tr2 - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Schur decomposition of an upper Hessenberg matrix by explicit shifted
/// QR with Givens rotations: on return `h` is upper triangular and `z`
/// has accumulated the similarity (`H_in = Z T Z^H` relative to the
/// incoming `z`).
fn hessenberg_schur(h: &mut DenseMatrix, z: &mut DenseMatrix) -> Result<()> {
    let n = h.n;
    if n == 0 {
        return Ok(());
    }
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut stall = 0usize;
    let mut budget = 60 * n + 200;

    'outer: loop {
        // Deflate converged subdiagonals from the bottom.
        while hi > 0 {
            let sub = h[(hi, hi - 1)].norm();
            let local = h[(hi - 1, hi - 1)].norm() + h[(hi, hi)].norm();
            if sub <= eps * local.max(scale * eps) {
                h[(hi, hi - 1)] = ZERO;
                hi -= 1;
                stall = 0;
            } else {
                break;
            }
        }
        if hi == 0 {
            return Ok(());
        }
        // Active window [lo, hi]: walk up to the first negligible
        // subdiagonal.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= eps * local.max(scale * eps) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }

        if budget == 0 {
            return Err(Error::Numerical(
                "dense QR iteration exceeded its budget".into(),
            ));
        }
        budget -= 1;
        stall += 1;

        let mu = if stall % 13 == 0 {
            // Exceptional shift to break symmetric stalls.
            h[(hi, hi)] + c(0.75 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson(h, hi)
        };

        // Explicit QR step on the window: Q R = H[lo..=hi] - mu I, then
        // H <- R Q + mu I, applied as a global similarity.
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots: Vec<(f64, C)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (cc, s) = givens(h[(k, k)], h[(k + 1, k)]);
            // G^H from the left on rows k, k+1 (columns k..n).
            for col in k..n {
                let t0 = h[(k, col)];
                let t1 = h[(k + 1, col)];
                h[(k, col)] = t0 * cc - s * t1;
                h[(k + 1, col)] = s.conj() * t0 + t1 * cc;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((cc, s));
        }
        for (k, (cc, s)) in rots.iter().enumerate().map(|(i, r)| (lo + i, r)) {
            // G from the right on columns k, k+1 (rows 0..=k+1).
            for row in 0..=(k + 1).min(n - 1) {
                let t0 = h[(row, k)];
                let t1 = h[(row, k + 1)];
                h[(row, k)] = t0 * *cc - t1 * s.conj();
                h[(row, k + 1)] = t0 * *s + t1 * *cc;
            }
            for row in 0..n {
                let t0 = z[(row, k)];
                let t1 = z[(row, k + 1)];
                z[(row, k)] = t0 * *cc - t1 * s.conj();
                z[(row, k + 1)] = t0 * *s + t1 * *cc;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
        continue 'outer;
    }
}

/// Full eigendecomposition result.
pub struct DenseEig {
    pub values: Vec<C>,
    /// Right eigenvectors, one per value, unit Euclidean norm.
    pub vectors: Vec<Vec<C>>,
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
///
/// Values are sorted by `(Re, Im)`. Intended for verification and for
/// the small projected problems inside the iterative solver; memory and
/// time are both O(n^3)-ish, keep `n` in the hundreds.
pub fn dense_eig(a: &DenseMatrix) -> Result<DenseEig> {
    let n = a.n;
    if n == 0 {
        return Ok(DenseEig { values: vec![], vectors: vec![] });
    }
    let mut t = a.clone();
    let mut z = DenseMatrix::identity(n);
    hessenberg(&mut t, &mut z);
    hessenberg_schur(&mut t, &mut z)?;

    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    let smlnum = f64::EPSILON * tnorm;

    // Back-substitution for each eigenvector of the triangular factor.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let a = t[(i, i)];
        let b = t[(j, j)];
        (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap()
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        let lambda = t[(i, i)];
        let mut y = vec![ZERO; n];
        y[i] = c(1.0);
        for k in (0..i).rev() {
            let mut acc = ZERO;
            for m in (k + 1)..=i {
                acc += t[(k, m)] * y[m];
            }
            let mut d = t[(k, k)] - lambda;
            if d.norm() < smlnum {
                d = c(smlnum);
            }
            y[k] = -acc / d;
        }
        // v = Z y
        let mut v = vec![ZERO; n];
        for (row, vr) in v.iter_mut().enumerate() {
            let mut acc = ZERO;
            for m in 0..=i {
                acc += z[(row, m)] * y[m];
            }
            *vr = acc;
        }
        let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    Ok(DenseEig { values, vectors })
}
