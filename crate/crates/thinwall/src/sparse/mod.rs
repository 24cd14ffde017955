//! Sparse linear algebra: CSR storage and a complex LU factorization
//! with partial pivoting.

mod csr;
mod lu;

pub use csr::CsrMatrix;
pub use lu::SparseLu;
