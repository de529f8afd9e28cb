//! Sparse direct solves backed by faer's supernodal LU.

use faer::prelude::Solve;
use faer::sparse::linalg::{LltError, LuError};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, MatRef, Side};

use super::{CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};

/// An LU factorization (with partial pivoting) of a square sparse matrix.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

fn to_csc(a: &CsrMatrix) -> SparseColMat<usize, f64> {
    // CSR arrays of A^T are the CSC arrays of A.
    let t = a.transpose();
    let symbolic = SymbolicSparseColMat::new_checked(
        a.nrows(),
        a.ncols(),
        t.row_ptr().to_vec(),
        None,
        t.col_idx().to_vec(),
    );
    SparseColMat::new(symbolic, t.values().to_vec())
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid(format!(
                "sparse solve needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(v) = a.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite matrix entry {v}")));
        }
        let csc = to_csc(a);
        let lu = csc.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Solver {
                message: "structurally or numerically singular matrix".into(),
                pivot: index,
            },
            LuError::Generic(e) => Error::Solver {
                message: format!("{e:?}"),
                pivot: 0,
            },
        })?;
        Ok(Self { n: a.nrows(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let rhs = MatRef::from_column_major_slice(b, self.n, 1);
        let x: Mat<f64> = self.lu.solve(rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Solver {
                message: "factorization produced non-finite solution (zero pivot)".into(),
                pivot: i,
            });
        }
        Ok(out)
    }
}

/// Attempts a sparse Cholesky factorization of `(A + Aᵀ)/2`. Returns `None`
/// when it is positive definite, otherwise the first non-positive pivot.
pub fn symmetric_part_indefinite_pivot(a: &CsrMatrix) -> Result<Option<usize>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("coercivity check needs a square matrix"));
    }
    let mut t = TripletBuilder::with_capacity(a.nrows(), a.ncols(), 2 * a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(i, j, 0.5 * v);
            t.push(j, i, 0.5 * v);
        }
    }
    match to_csc(&t.build()).sp_cholesky(Side::Lower) {
        Ok(_) => Ok(None),
        Err(LltError::Numeric(
            faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
        )) => Ok(Some(index)),
        Err(LltError::Generic(e)) => Err(Error::Solver {
            message: format!("{e:?}"),
            pivot: 0,
        }),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `‖Ax − b‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Solves `Ax = b` by sparse LU, with one step of iterative refinement when
/// the first residual exceeds `1e-12 ‖b‖`.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = SparseLu::factor(a)?;
    solve_refined(a, &lu, b)
}

pub(crate) fn solve_refined(a: &CsrMatrix, lu: &SparseLu, b: &[f64]) -> Result<Vec<f64>> {
    let mut x = lu.solve(b)?;
    if relative_residual(a, &x, b) > 1e-12 {
        let mut r = a.mul_vec(&x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let dx = lu.solve(&r)?;
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cholesky_detects_indefinite_symmetric_part() {
        let spd = CsrMatrix::from_dense(&[vec![2.0, 3.0], vec![-1.0, 3.0]]);
        assert_eq!(symmetric_part_indefinite_pivot(&spd).unwrap(), None);
        let indefinite = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(symmetric_part_indefinite_pivot(&indefinite)
            .unwrap()
            .is_some());
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let x = sparse_solve(&CsrMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = sparse_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-15);
        assert!((x[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100;
        // B^T B + n I with sparse random B
        let mut dense = vec![vec![0.0; n]; n];
        for _ in 0..400 {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let v: f64 = rng.random_range(-1.0..1.0);
            dense[i][j] += v;
            dense[j][i] += v;
        }
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] += n as f64;
        }
        let a = CsrMatrix::from_dense(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = sparse_solve(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let mut t = TripletBuilder::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1.0);
        // row/col 2 structurally empty
        let a = t.build();
        match sparse_solve(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::Solver { .. }) => {}
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
