//! Full-order SBM discretization: the stabilized P1–P1 Stokes block system,
//! the scalar SBM Poisson operator used for supremizers, and the FOM solve.
//!
//! Velocity unknowns are stored component-major over the active nodes: entry
//! `c * n_a + k` is component `c` at active node `k`. Pressure uses one entry
//! per active node. Global fields use the same layout over all mesh nodes.

mod poisson;
mod stokes;

pub use poisson::{assemble_poisson, assemble_poisson_sbm, solve_poisson, ScalarData};
pub use stokes::{assemble_stokes, viscous_element_matrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurrogateDomain;
use crate::linalg::{relative_residual, CsrMatrix, SparseLu, TripletBuilder};
use crate::mesh::Point;

/// Relative residual accepted for a full-order solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub nu: f64,
    pub body_force: Point,
    /// Velocity imposed on the left edge.
    pub inlet_velocity: Point,
    /// Traction on the right edge.
    pub outflow_traction: Point,
    /// Velocity imposed on the embedded boundary.
    pub embedded_dirichlet: Point,
    pub nitsche_alpha: f64,
    pub nitsche_beta: f64,
    pub stab_delta: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            body_force: [0.0, 0.0],
            inlet_velocity: [1.0, 0.0],
            outflow_traction: [0.0, 0.0],
            embedded_dirichlet: [0.0, 0.0],
            nitsche_alpha: 10.0,
            nitsche_beta: 1.0,
            stab_delta: 0.1,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.nu,
            self.nitsche_alpha,
            self.nitsche_beta,
            self.stab_delta,
        ]
        .iter()
        .chain(&self.body_force)
        .chain(&self.inlet_velocity)
        .chain(&self.outflow_traction)
        .chain(&self.embedded_dirichlet)
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("physics parameters must be finite"));
        }
        if self.nu <= 0.0 {
            return Err(Error::invalid(format!(
                "viscosity must be positive, got {}",
                self.nu
            )));
        }
        if self.nitsche_alpha <= 0.0 {
            return Err(Error::invalid(format!(
                "nitsche_alpha must be positive, got {}",
                self.nitsche_alpha
            )));
        }
        if self.nitsche_beta < 0.0 {
            return Err(Error::invalid(format!(
                "nitsche_beta must be non-negative, got {}",
                self.nitsche_beta
            )));
        }
        if self.stab_delta <= 0.0 {
            return Err(Error::invalid(format!(
                "stab_delta must be positive, got {}",
                self.stab_delta
            )));
        }
        Ok(())
    }
}

/// Saddle-point blocks over the active nodes with strong boundary conditions
/// already eliminated.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub bhat: CsrMatrix,
    pub c: CsrMatrix,
    pub f_g: Vec<f64>,
    pub f_q: Vec<f64>,
    /// Active index -> global node.
    pub active_nodes: Vec<usize>,
    pub n_nodes: usize,
}

impl BlockSystem {
    pub fn n_active(&self) -> usize {
        self.active_nodes.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_active()
    }

    pub fn dim(&self) -> usize {
        3 * self.n_active()
    }

    /// `[[A, Bᵀ], [B + B̂, C]]`.
    pub fn saddle_matrix(&self) -> CsrMatrix {
        let nv = self.n_velocity();
        let mut t = TripletBuilder::with_capacity(
            self.dim(),
            self.dim(),
            self.a.nnz() + 2 * self.b.nnz() + self.bhat.nnz() + self.c.nnz(),
        );
        push_block(&mut t, &self.a, 0, 0);
        push_block(&mut t, &self.b, nv, 0);
        push_block(&mut t, &self.bhat, nv, 0);
        push_block(&mut t, &self.c, nv, nv);
        for i in 0..self.b.nrows() {
            let (cols, vals) = self.b.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(j, nv + i, v);
            }
        }
        let m = t.build();
        debug_assert_eq!(m.nrows(), self.dim());
        m
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f_g.clone();
        r.extend_from_slice(&self.f_q);
        r
    }

    /// Scatters active-node unknowns `[u; p]` to global fields, zero on ghost nodes.
    pub fn scatter(&self, x: &[f64], mu: &[f64]) -> FieldSolution {
        let (na, nh) = (self.n_active(), self.n_nodes);
        assert_eq!(x.len(), 3 * na);
        let mut u = vec![0.0; 2 * nh];
        let mut p = vec![0.0; nh];
        for (k, &g) in self.active_nodes.iter().enumerate() {
            u[g] = x[k];
            u[nh + g] = x[na + k];
            p[g] = x[2 * na + k];
        }
        FieldSolution {
            u,
            p,
            mu: mu.to_vec(),
        }
    }

    /// Restricts a global component-major field with `ncomp` components to
    /// the active nodes.
    pub fn gather(&self, field: &[f64], ncomp: usize) -> Vec<f64> {
        let nh = self.n_nodes;
        assert_eq!(field.len(), ncomp * nh);
        (0..ncomp)
            .flat_map(|c| self.active_nodes.iter().map(move |&g| field[c * nh + g]))
            .collect()
    }

    /// Empty rows of the saddle matrix are a sign of a broken assembly.
    pub fn check_rows(&self, saddle: &CsrMatrix) -> Result<()> {
        match (0..saddle.nrows()).find(|&i| saddle.is_row_empty(i)) {
            Some(row) => Err(Error::SingularAssembly { row }),
            None => Ok(()),
        }
    }
}

fn push_block(t: &mut TripletBuilder, m: &CsrMatrix, r0: usize, c0: usize) {
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(r0 + i, c0 + j, v);
        }
    }
}

/// Nodal full-order fields over the whole background mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    /// Component-major velocity, length `2 * n_nodes`.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Sparse LU of the saddle matrix followed by a residual check.
pub fn solve_fom(sys: &BlockSystem, mu: &[f64]) -> Result<FieldSolution> {
    let m = sys.saddle_matrix();
    sys.check_rows(&m)?;
    let rhs = sys.rhs();
    let lu = SparseLu::factor(&m)?;
    let x = crate::linalg::solve_refined(&m, &lu, &rhs)?;
    let res = relative_residual(&m, &x, &rhs);
    if res > RESIDUAL_TOL {
        return Err(Error::Solver {
            message: format!("relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}"),
            pivot: 0,
        });
    }
    Ok(sys.scatter(&x, mu))
}

/// Strongly constrained DOFs and the values they take.
#[derive(Debug, Clone)]
pub(crate) struct Constraints {
    fixed: Vec<Option<f64>>,
}

impl Constraints {
    pub(crate) fn none(n: usize) -> Self {
        Self {
            fixed: vec![None; n],
        }
    }

    pub(crate) fn set(&mut self, dof: usize, value: f64) {
        self.fixed[dof] = Some(value);
    }

    pub(crate) fn set_if_free(&mut self, dof: usize, value: f64) {
        self.fixed[dof].get_or_insert(value);
    }

    pub(crate) fn get(&self, dof: usize) -> Option<f64> {
        self.fixed[dof]
    }
}

/// Accumulates a square operator with symmetric elimination of constrained
/// rows and columns. A constrained row keeps its unconstrained diagonal so the
/// scaling of the matrix is preserved.
pub(crate) struct EliminatingBuilder<'c> {
    cons: &'c Constraints,
    diag: Vec<f64>,
    t: TripletBuilder,
    rhs: Vec<Vec<f64>>,
}

impl<'c> EliminatingBuilder<'c> {
    pub(crate) fn new(cons: &'c Constraints, n: usize, n_rhs: usize, cap: usize) -> Self {
        Self {
            cons,
            diag: vec![0.0; n],
            t: TripletBuilder::with_capacity(n, n, cap),
            rhs: vec![vec![0.0; n]; n_rhs],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, r: usize, c: usize, v: f64) {
        match (self.cons.get(r), self.cons.get(c)) {
            (Some(_), _) => {
                if r == c {
                    self.diag[r] += v;
                }
            }
            (None, Some(g)) => {
                for rhs in &mut self.rhs {
                    rhs[r] -= v * g;
                }
            }
            (None, None) => self.t.push(r, c, v),
        }
    }

    /// Adds to right-hand side `k`, ignoring constrained rows.
    #[inline]
    pub(crate) fn add_rhs(&mut self, k: usize, r: usize, v: f64) {
        if self.cons.get(r).is_none() {
            self.rhs[k][r] += v;
        }
    }

    pub(crate) fn finish(mut self) -> (CsrMatrix, Vec<Vec<f64>>) {
        for r in 0..self.diag.len() {
            if let Some(g) = self.cons.get(r) {
                let d = if self.diag[r] != 0.0 {
                    self.diag[r]
                } else {
                    1.0
                };
                self.t.push(r, r, d);
                for rhs in &mut self.rhs {
                    rhs[r] = d * g;
                }
            }
        }
        (self.t.build(), self.rhs)
    }
}

/// Active-node indices of a mesh triangle, or `None` if any vertex is ghost.
pub(crate) fn local_dofs(surr: &SurrogateDomain, t: &[usize; 3]) -> Option<[usize; 3]> {
    Some([
        surr.active_index(t[0])?,
        surr.active_index(t[1])?,
        surr.active_index(t[2])?,
    ])
}
