//! Sparse complex LU with partial pivoting, left-looking (Gilbert–Peierls)
//! with depth-first symbolic reach per column.
//!
//! This is the workhorse behind shift-invert spectral transforms and the
//! implicit-midpoint propagator, so it is written for reliability on the
//! banded-plus-wraparound patterns our grids produce, not for
//! supernodal speed.

use num_complex::Complex64;

use crate::err::{Error, Result};

use super::csr::CsrMatrix;

const NONE: usize = usize::MAX;

/// LU factors of a row-permuted matrix: `P A = L U` with unit-diagonal
/// `L` (diagonal not stored) and `U` stored by columns with a separate
/// diagonal.
pub struct SparseLu {
    n: usize,
    l_colptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<Complex64>,
    u_colptr: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<Complex64>,
    u_diag: Vec<Complex64>,
    /// `p[k]` = original row chosen as the k-th pivot.
    p: Vec<usize>,
}

struct Csc {
    colptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<Complex64>,
}

fn to_csc(a: &CsrMatrix) -> Csc {
    let t = a.transpose();
    Csc { colptr: t.indptr, rows: t.indices, vals: t.data }
}

impl SparseLu {
    /// Factor `A` (square). Fails with [`Error::SingularShift`] when a
    /// pivot column has no usable entry, which in shift-invert mode means
    /// the shift sits exactly on an eigenvalue.
    pub fn factor(a: &CsrMatrix) -> Result<SparseLu> {
        let n = a.n;
        let a = to_csc(a);

        let mut l_colptr = Vec::with_capacity(n + 1);
        let mut l_rows: Vec<usize> = Vec::new();
        let mut l_vals: Vec<Complex64> = Vec::new();
        let mut u_colptr = Vec::with_capacity(n + 1);
        let mut u_rows: Vec<usize> = Vec::new();
        let mut u_vals: Vec<Complex64> = Vec::new();
        let mut u_diag = vec![Complex64::new(0.0, 0.0); n];
        l_colptr.push(0);
        u_colptr.push(0);

        // pinv[orig_row] = pivot step that claimed it, or NONE.
        let mut pinv = vec![NONE; n];
        let mut p = vec![NONE; n];

        // Dense workspace and DFS scratch.
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut stamp = vec![NONE; n];
        let mut pattern: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

        for j in 0..n {
            pattern.clear();
            // Symbolic: depth-first reach of A(:, j) through the columns
            // of L already computed; postorder gives a topological order
            // for the numeric solve below.
            for idx in a.colptr[j]..a.colptr[j + 1] {
                let start = a.rows[idx];
                if stamp[start] == j {
                    continue;
                }
                stack.push((start, 0));
                stamp[start] = j;
                while let Some(&(node, next)) = stack.last() {
                    // Only pivotal rows have an L column to traverse.
                    let col = pinv[node];
                    let (lo, hi) = if col == NONE {
                        (0, 0)
                    } else {
                        (l_colptr[col], l_colptr[col + 1])
                    };
                    let mut pushed = false;
                    let mut k = next;
                    while lo + k < hi {
                        let child = l_rows[lo + k];
                        k += 1;
                        if stamp[child] != j {
                            stack.last_mut().unwrap().1 = k;
                            stamp[child] = j;
                            stack.push((child, 0));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        stack.pop();
                        pattern.push(node);
                    }
                }
            }
            // pattern is in postorder; reverse = topological order.
            pattern.reverse();

            // Numeric: scatter A(:, j), then eliminate along the pattern.
            for i in &pattern {
                x[*i] = Complex64::new(0.0, 0.0);
            }
            for idx in a.colptr[j]..a.colptr[j + 1] {
                x[a.rows[idx]] = a.vals[idx];
            }
            for &i in &pattern {
                let col = pinv[i];
                if col == NONE {
                    continue;
                }
                let xi = x[i];
                if xi == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in l_colptr[col]..l_colptr[col + 1] {
                    x[l_rows[k]] -= l_vals[k] * xi;
                }
            }

            // Pivot: largest magnitude among not-yet-pivotal rows, ties
            // to the smallest original index for determinism.
            let mut piv_row = NONE;
            let mut piv_mag = 0.0f64;
            for &i in &pattern {
                if pinv[i] != NONE {
                    continue;
                }
                let m = x[i].norm();
                if !m.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite value during factorization at column {j}"
                    )));
                }
                if m > piv_mag || (m == piv_mag && piv_row != NONE && i < piv_row) {
                    piv_mag = m;
                    piv_row = i;
                }
            }
            if piv_row == NONE || piv_mag == 0.0 {
                return Err(Error::SingularShift(format!(
                    "no pivot available in column {j}; the shifted matrix is singular"
                )));
            }
            let piv = x[piv_row];
            pinv[piv_row] = j;
            p[j] = piv_row;
            u_diag[j] = piv;

            // Split the solved column into U (pivotal rows) and L
            // (remaining rows, scaled by the pivot).
            for &i in &pattern {
                let v = x[i];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let pi = pinv[i];
                if pi != NONE && pi < j {
                    u_rows.push(pi);
                    u_vals.push(v);
                } else if i != piv_row {
                    l_rows.push(i);
                    l_vals.push(v / piv);
                }
            }
            u_colptr.push(u_rows.len());
            l_colptr.push(l_rows.len());
        }

        // Renumber L rows into pivotal positions (every row is pivotal
        // now), so the solves never touch the permutation.
        for r in l_rows.iter_mut() {
            *r = pinv[*r];
        }

        Ok(SparseLu {
            n,
            l_colptr,
            l_rows,
            l_vals,
            u_colptr,
            u_rows,
            u_vals,
            u_diag,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fill of both factors, for diagnostics.
    pub fn nnz(&self) -> usize {
        self.l_vals.len() + self.u_vals.len() + self.n
    }

    /// Solve `A x = b` in place (`b` becomes `x`).
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        // y = P b
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for k in 0..self.n {
            y[k] = b[self.p[k]];
        }
        // L y' = y (unit lower triangular, columns in pivotal order)
        for j in 0..self.n {
            let t = y[j];
            if t != Complex64::new(0.0, 0.0) {
                for k in self.l_colptr[j]..self.l_colptr[j + 1] {
                    y[self.l_rows[k]] -= self.l_vals[k] * t;
                }
            }
        }
        // U x = y'
        for j in (0..self.n).rev() {
            let t = y[j] / self.u_diag[j];
            y[j] = t;
            if t != Complex64::new(0.0, 0.0) {
                for k in self.u_colptr[j]..self.u_colptr[j + 1] {
                    y[self.u_rows[k]] -= self.u_vals[k] * t;
                }
            }
        }
        b.copy_from_slice(&y);
    }

    /// Allocating solve.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Reciprocal condition estimate from the pivot range; purely
    /// diagnostic.
    pub fn pivot_ratio(&self) -> f64 {
        let mx = self.u_diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mn = self.u_diag.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if mx == 0.0 {
            0.0
        } else {
            mn / mx
        }
    }
}
