//! Mass-weighted proper orthogonal decomposition by the method of snapshots.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::mesh::MassMatrix;

/// Modes with `λ_k < RANK_TOL · λ_1` are numerically zero and never emitted.
pub const RANK_TOL: f64 = 1e-14;

/// M-orthonormal modes (columns) with the full correlation spectrum.
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub modes: Mat<f64>,
    /// All `N_s` eigenvalues of the correlation matrix, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    /// Components per node; the inner product is the block-diagonal mass matrix.
    pub components: usize,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    /// Number of eigenvalues above the rank threshold.
    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.eigenvalues)
    }

    /// The first `n` modes (bases are nested).
    pub fn truncated(&self, n: usize) -> Mat<f64> {
        let n = n.min(self.n_modes());
        Mat::from_fn(self.modes.nrows(), n, |i, j| self.modes[(i, j)])
    }

    /// `max |Lᵀ M L − I|`.
    pub fn orthonormality_error(&self, m: &MassMatrix) -> f64 {
        let ml = apply_mass(&self.modes, m);
        let g = self.modes.transpose() * &ml;
        let n = g.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

fn numerical_rank(ev: &[f64]) -> usize {
    match ev.first() {
        Some(&l1) if l1 > 0.0 => ev.iter().take_while(|&&l| l >= RANK_TOL * l1).count(),
        _ => 0,
    }
}

/// Applies the block-diagonal mass matrix to every column.
pub fn apply_mass(s: &Mat<f64>, m: &MassMatrix) -> Mat<f64> {
    let mut out = Mat::zeros(s.nrows(), s.ncols());
    for j in 0..s.ncols() {
        let ms = m.apply_blocks(s.col_as_slice(j));
        out.col_as_slice_mut(j).copy_from_slice(&ms);
    }
    out
}

/// Builds `n_r` modes from the snapshot columns of `s`: the correlation matrix
/// `C = Sᵀ M S` is diagonalized, modes are `S q_k / √λ_k` rescaled to unit
/// M-norm. A request beyond the numerical rank is truncated with a warning.
pub fn pod(s: &Mat<f64>, m: &MassMatrix, n_r: usize) -> Result<PodBasis> {
    let (nrows, ns) = (s.nrows(), s.ncols());
    if nrows == 0 || nrows % m.dim() != 0 {
        return Err(Error::invalid(format!(
            "snapshot rows ({nrows}) are not a multiple of the mass matrix size ({})",
            m.dim()
        )));
    }
    if n_r == 0 || n_r > ns {
        return Err(Error::invalid(format!(
            "requested {n_r} modes from {ns} snapshots"
        )));
    }
    let ms = apply_mass(s, m);
    let c = s.transpose() * &ms;
    let eig = sym_eig(&c)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let rank = numerical_rank(&eigenvalues);
    if rank == 0 {
        return Err(Error::invalid("snapshot matrix has zero M-norm"));
    }
    let n = if n_r > rank {
        log::warn!(
            "requested {n_r} modes but the snapshots have numerical rank {rank}; truncating"
        );
        rank
    } else {
        n_r
    };
    let q = Mat::from_fn(ns, n, |i, k| eig.vectors[(i, k)] / eigenvalues[k].sqrt());
    let mut modes = s * &q;
    for k in 0..n {
        let col = modes.col_as_slice(k);
        let norm = m.norm_blocks(col);
        for v in modes.col_as_slice_mut(k) {
            *v /= norm;
        }
    }
    Ok(PodBasis {
        modes,
        eigenvalues,
        components: nrows / m.dim(),
    })
}
