//! Dense and sparse real linear algebra at desk scale.

mod dense;
mod eig;
mod factor;
mod sparse;
mod tridiag;

pub use dense::DenseMatrix;
pub use eig::{
    jacobi_eigenvalues, symmetric_eig, symmetric_eigenvalues, EigenDecomposition, SYMMETRY_TOLERANCE,
};
pub use factor::{dense_solve_spd, dense_solve_symmetric_indefinite, Cholesky, Ldlt};
pub use sparse::{SparseMatrix, TripletBuilder};
