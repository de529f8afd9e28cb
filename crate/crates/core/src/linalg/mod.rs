//! Linear algebra contracts used by the pipeline: CSR storage, sparse direct
//! solves, dense symmetric eigenproblems and dense LU.

mod dense;
mod solve;
mod sparse;

pub use dense::{dense_solve, sym_eig, DenseLu, SymEig, DENSE_PIVOT_TOL};
pub use faer::Mat;
pub(crate) use solve::solve_refined;
pub use solve::{relative_residual, sparse_solve, symmetric_part_indefinite_pivot, SparseLu};
pub use sparse::{CsrMatrix, TripletBuilder};
