//! Galerkin projection of the full-order blocks and the reduced solve.

use faer::{Mat, MatRef};

use crate::assembly::{BlockSystem, FieldSolution};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseLu};
use crate::mesh::MassMatrix;

/// Reduced spaces: the (possibly enriched) velocity basis and the pressure
/// basis, both over the whole background mesh.
#[derive(Debug, Clone)]
pub struct RomBasis {
    /// `[φ_1 … φ_{n_u}, η_1 … η_{n_sup}]`, `2 N_h` rows.
    pub velocity: Mat<f64>,
    pub pressure: Mat<f64>,
    pub n_u: usize,
    pub n_sup: usize,
}

impl RomBasis {
    pub fn n_p(&self) -> usize {
        self.pressure.ncols()
    }
}

/// Appends the first `n_sup` supremizer modes to the velocity modes, without
/// re-orthonormalizing across the two groups.
pub fn enrich(l_u: &Mat<f64>, l_sup: Option<&Mat<f64>>, n_sup: usize) -> Result<Mat<f64>> {
    let Some(sup) = l_sup.filter(|_| n_sup > 0) else {
        return Ok(l_u.clone());
    };
    if sup.nrows() != l_u.nrows() {
        return Err(Error::invalid(
            "velocity and supremizer bases have different row counts",
        ));
    }
    let n_sup = n_sup.min(sup.ncols());
    let nu = l_u.ncols();
    Ok(Mat::from_fn(l_u.nrows(), nu + n_sup, |i, j| {
        if j < nu {
            l_u[(i, j)]
        } else {
            sup[(i, j - nu)]
        }
    }))
}

/// Dense reduced blocks.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub bhat: Mat<f64>,
    pub c: Mat<f64>,
    pub f_g: Vec<f64>,
    pub f_q: Vec<f64>,
}

impl ReducedSystem {
    pub fn n_velocity(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.c.nrows()
    }

    /// `[[A^r, B^rᵀ], [B^r + B̂^r, C^r]]`.
    pub fn saddle_matrix(&self) -> Mat<f64> {
        let (nu, np) = (self.n_velocity(), self.n_pressure());
        Mat::from_fn(nu + np, nu + np, |i, j| match (i < nu, j < nu) {
            (true, true) => self.a[(i, j)],
            (true, false) => self.b[(j - nu, i)],
            (false, true) => self.b[(i - nu, j)] + self.bhat[(i - nu, j)],
            (false, false) => self.c[(i - nu, j - nu)],
        })
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f_g.clone();
        r.extend_from_slice(&self.f_q);
        r
    }
}

/// Restricts the rows of a global component-major basis to the active DOFs
/// and returns its transpose (`k × n_dof`, column-major): row `d` of the
/// restricted basis is the contiguous slice `[d * k, (d + 1) * k)`.
fn restrict_transposed(sys: &BlockSystem, basis: &Mat<f64>, ncomp: usize) -> Vec<f64> {
    let (nh, na, k) = (sys.n_nodes, sys.n_active(), basis.ncols());
    let mut out = vec![0.0; ncomp * na * k];
    for j in 0..k {
        let col = basis.col_as_slice(j);
        for c in 0..ncomp {
            for (a, &g) in sys.active_nodes.iter().enumerate() {
                out[(c * na + a) * k + j] = col[c * nh + g];
            }
        }
    }
    out
}

/// `Lₗᵀ M L_r` for a sparse `M`, with both bases given transposed.
fn congruence(m: &CsrMatrix, left_t: MatRef<'_, f64>, right_t: &[f64], k_right: usize) -> Mat<f64> {
    let mr_t = m.mul_dense_transposed(right_t, k_right);
    let mr_t = MatRef::from_column_major_slice(&mr_t, k_right, m.nrows());
    left_t * mr_t.transpose()
}

fn mat_vec(lt: MatRef<'_, f64>, f: &[f64]) -> Vec<f64> {
    let fv = MatRef::from_column_major_slice(f, f.len(), 1);
    let r = lt * fv;
    (0..r.nrows()).map(|i| r[(i, 0)]).collect()
}

/// Galerkin projection of every block, including the stabilization block.
pub fn project(sys: &BlockSystem, basis: &RomBasis) -> Result<ReducedSystem> {
    let nh = sys.n_nodes;
    if basis.velocity.nrows() != 2 * nh || basis.pressure.nrows() != nh {
        return Err(Error::invalid(format!(
            "basis rows ({}, {}) do not match the mesh ({} nodes)",
            basis.velocity.nrows(),
            basis.pressure.nrows(),
            nh
        )));
    }
    let (ku, kp) = (basis.velocity.ncols(), basis.pressure.ncols());
    let (nv, na) = (sys.n_velocity(), sys.n_active());
    let lu_t = restrict_transposed(sys, &basis.velocity, 2);
    let lp_t = restrict_transposed(sys, &basis.pressure, 1);
    let lu_ref = MatRef::from_column_major_slice(&lu_t, ku, nv);
    let lp_ref = MatRef::from_column_major_slice(&lp_t, kp, na);
    Ok(ReducedSystem {
        a: congruence(&sys.a, lu_ref, &lu_t, ku),
        b: congruence(&sys.b, lp_ref, &lu_t, ku),
        bhat: congruence(&sys.bhat, lp_ref, &lu_t, ku),
        c: congruence(&sys.c, lp_ref, &lp_t, kp),
        f_g: mat_vec(lu_ref, &sys.f_g),
        f_q: mat_vec(lp_ref, &sys.f_q),
    })
}

#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `L̃_u a` over the whole mesh.
    pub u: Vec<f64>,
    /// `L_p b` over the whole mesh.
    pub p: Vec<f64>,
}

/// Solves the reduced coefficients only.
pub fn solve_reduced(red: &ReducedSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let lu = DenseLu::factor(&red.saddle_matrix()).map_err(|e| match e {
        Error::Solver { message, pivot } => Error::Stability(format!(
            "reduced saddle-point matrix is singular at pivot {pivot} ({message}); \
             enrich the velocity space with supremizer modes or reduce the pressure mode count"
        )),
        other => other,
    })?;
    let mut x = lu.solve(&red.rhs());
    let b = x.split_off(red.n_velocity());
    Ok((x, b))
}

/// Dense LU of the reduced saddle system and reconstruction of the fields.
pub fn solve_rom(red: &ReducedSystem, basis: &RomBasis) -> Result<ReducedSolution> {
    let (a, b) = solve_reduced(red)?;
    Ok(reconstruct(basis, a, b))
}

/// `u = L̃_u a`, `p = L_p b`.
pub fn reconstruct(basis: &RomBasis, a: Vec<f64>, b: Vec<f64>) -> ReducedSolution {
    ReducedSolution {
        u: combine(&basis.velocity, &a),
        p: combine(&basis.pressure, &b),
        a,
        b,
    }
}

fn combine(l: &Mat<f64>, coef: &[f64]) -> Vec<f64> {
    let c = MatRef::from_column_major_slice(coef, coef.len(), 1);
    let r = l * c;
    r.col_as_slice(0).to_vec()
}

/// M-weighted relative errors `(e_u, e_p)` over the whole background mesh.
pub fn relative_error(
    full: &FieldSolution,
    red: &ReducedSolution,
    m: &MassMatrix,
) -> Result<(f64, f64)> {
    Ok((
        relative_field_error(&full.u, &red.u, m)?,
        relative_field_error(&full.p, &red.p, m)?,
    ))
}

pub fn relative_field_error(reference: &[f64], approx: &[f64], m: &MassMatrix) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(Error::invalid("fields have different lengths"));
    }
    let norm = m.norm_blocks(reference);
    if norm == 0.0 {
        return Err(Error::invalid("reference field has zero norm"));
    }
    let diff: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| a - b).collect();
    Ok(m.norm_blocks(&diff) / norm)
}
