//! Dense symmetric eigendecomposition and LU solves.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Mat<f64>,
}

/// Symmetric eigendecomposition. The input is symmetrized as `(C + Cᵀ)/2`
/// before factorization.
pub fn sym_eig(c: &Mat<f64>) -> Result<SymEig> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::invalid(format!(
            "sym_eig needs a square matrix, got {}x{}",
            n,
            c.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..n {
            if !c[(i, j)].is_finite() {
                return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver {
            message: format!("eigensolver did not converge: {e:?}"),
            pivot: 0,
        })?;
    let s = evd.S();
    let u = evd.U();
    // faer returns ascending order
    let values: Vec<f64> = (0..n).rev().map(|k| s[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok(SymEig { values, vectors })
}

/// Dense LU with partial pivoting and a relative pivot threshold.
pub struct DenseLu {
    lu: PartialPivLu<f64>,
    n: usize,
}

/// Pivots smaller than this fraction of the largest |U| diagonal entry are
/// treated as zero.
pub const DENSE_PIVOT_TOL: f64 = 1e-14;

impl DenseLu {
    pub fn factor(a: &Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::invalid(format!(
                "dense LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let max = (0..n).fold(0.0f64, |m, k| m.max(u[(k, k)].abs()));
        for k in 0..n {
            let p = u[(k, k)].abs();
            if !p.is_finite() || p <= DENSE_PIVOT_TOL * max || max == 0.0 {
                return Err(Error::Solver {
                    message: format!("dense matrix is singular (|u_kk| = {p:.3e}, max {max:.3e})"),
                    pivot: k,
                });
            }
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = faer::MatRef::from_column_major_slice(b, self.n, 1);
        let x: Mat<f64> = self.lu.solve(rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn dense_solve(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseLu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let c = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 5.0, -2.0][i] } else { 0.0 });
        let e = sym_eig(&c).unwrap();
        assert_eq!(e.values, vec![5.0, 1.0, -2.0]);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        let c = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let e = sym_eig(&c).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        // C q = lambda q
        for k in 0..2 {
            for i in 0..2 {
                let cq: f64 = (0..2).map(|j| c[(i, j)] * e.vectors[(j, k)]).sum();
                assert!((cq - e.values[k] * e.vectors[(i, k)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let v = [1.0, -2.0, 0.5, 3.0];
        let c = Mat::from_fn(4, 4, |i, j| v[i] * v[j]);
        let e = sym_eig(&c).unwrap();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        assert!((e.values[0] - n2).abs() < 1e-12);
        for &l in &e.values[1..] {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_residual_and_orthogonality() {
        let n = 12;
        let c = Mat::from_fn(n, n, |i, j| {
            1.0 / (1.0 + (i + j) as f64) + if i == j { 0.3 } else { 0.0 }
        });
        let e = sym_eig(&c).unwrap();
        let cq = &c * &e.vectors;
        let mut res = 0.0f64;
        let mut orth = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                res = res.max((cq[(i, k)] - e.values[k] * e.vectors[(i, k)]).abs());
            }
            for l in 0..n {
                let d: f64 = (0..n).map(|i| e.vectors[(i, k)] * e.vectors[(i, l)]).sum();
                orth = orth.max((d - if k == l { 1.0 } else { 0.0 }).abs());
            }
        }
        assert!(res < 1e-10 * e.values[0]);
        assert!(orth < 1e-10);
    }

    #[test]
    fn rejects_non_finite() {
        let c = Mat::from_fn(2, 2, |i, _| if i == 0 { f64::NAN } else { 1.0 });
        assert!(matches!(sym_eig(&c), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dense_lu_solves_and_detects_singularity() {
        let a = Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [2.0, 1.0]][i][j]);
        let x = dense_solve(&a, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let s = Mat::from_fn(2, 2, |i, _| [1.0, 2.0][i]);
        assert!(matches!(DenseLu::factor(&s), Err(Error::Solver { .. })));
    }
}
