//! Minimal compressed-sparse-row storage for square complex matrices.
//!
//! Just enough structure for operator assembly, matrix-vector products,
//! transposition and row-wise traversal; factorization lives in
//! [`super::lu`].

use num_complex::Complex64;

use crate::err::{Error, Result};

/// Square sparse matrix, CSR layout, rows sorted by column index, no
/// explicitly stored zeros (exact zeros are dropped at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from unordered triplets; duplicate entries are summed,
    /// entries that cancel to exactly zero are dropped.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        for &(i, j, v) in &t {
            if i >= n || j >= n {
                return Err(Error::ShapeMismatch(format!(
                    "triplet ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::ShapeMismatch(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
        }
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == i && lc == j {
                    *data.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            indices.push(j);
            data.push(v);
        }
        // Drop exact zeros produced by accumulation.
        let mut k = 0;
        for idx in 0..data.len() {
            if data[idx] != Complex64::new(0.0, 0.0) {
                rows[k] = rows[idx];
                indices[k] = indices[idx];
                data[k] = data[idx];
                k += 1;
            }
        }
        rows.truncate(k);
        indices.truncate(k);
        data.truncate(k);
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Ok(CsrMatrix { n, indptr, indices, data })
    }

    /// Identity scaled by `c`.
    pub fn scaled_identity(n: usize, c: Complex64) -> Self {
        CsrMatrix {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![c; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Allocating matvec.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> CsrMatrix {
        let n = self.n;
        let mut indptr = vec![0usize; n + 1];
        for &j in &self.indices {
            indptr[j + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        let mut pos = indptr.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![Complex64::new(0.0, 0.0); self.nnz()];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                indices[pos[j]] = i;
                data[pos[j]] = v;
                pos[j] += 1;
            }
        }
        CsrMatrix { n, indptr, indices, data }
    }

    /// Largest entry magnitude; the operator scale used in residual and
    /// hermiticity contracts.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self + c * other` with matching dimensions.
    pub fn add_scaled(&self, other: &CsrMatrix, c: Complex64) -> Result<CsrMatrix> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "cannot add a {}x{} and a {}x{} matrix",
                self.n, self.n, other.n, other.n
            )));
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((i, j, v));
            }
            let (cols, vals) = other.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((i, j, c * v));
            }
        }
        CsrMatrix::from_triplets(self.n, t)
    }

    /// `self - sigma I`, the matrix handed to the factorization in
    /// shift-invert mode.
    pub fn shifted(&self, sigma: Complex64) -> CsrMatrix {
        self.add_scaled(&CsrMatrix::scaled_identity(self.n, Complex64::new(1.0, 0.0)), -sigma)
            .expect("identity shares the dimension")
    }

    /// Dense row-major copy (cross-check paths only; quadratic memory).
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    /// Largest row population, reported in assembly metadata.
    pub fn max_row_nnz(&self) -> usize {
        (0..self.n).map(|i| self.indptr[i + 1] - self.indptr[i]).max().unwrap_or(0)
    }
}
