//! Snapshot matrices of full-order solutions and supremizers.

use faer::Mat;
use rayon::prelude::*;

use crate::assembly::{assemble_poisson_sbm, solve_poisson, FieldSolution, ProblemConfig};
use crate::error::{Error, Result};
use crate::geometry::SurrogateDomain;
use crate::mesh::{Point, TriMesh};

/// Snapshot columns in sample order over the whole background mesh.
#[derive(Debug, Clone)]
pub struct Snapshots {
    /// `2 N_h × N_s`, component-major rows.
    pub u: Mat<f64>,
    /// `N_h × N_s`.
    pub p: Mat<f64>,
    pub mu: Vec<Vec<f64>>,
}

impl Snapshots {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

pub(crate) fn columns_to_mat(cols: &[Vec<f64>]) -> Mat<f64> {
    let n = cols.first().map_or(0, Vec::len);
    let mut m = Mat::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.col_as_slice_mut(j).copy_from_slice(c);
    }
    m
}

/// Runs `f` on every sample in parallel; the first failure in sample order is
/// reported with its index and parameter.
fn per_sample<T: Send>(
    samples: &[Vec<f64>],
    f: impl Fn(usize, &[f64]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = samples
        .par_iter()
        .enumerate()
        .map(|(k, mu)| f(k, mu))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Sample {
                index,
                mu: samples[index].clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// One full-order solve per sample, executed on the current rayon pool with
/// columns placed in sample order.
pub fn collect_snapshots<F>(samples: &[Vec<f64>], solver: F) -> Result<Snapshots>
where
    F: Fn(&[f64]) -> Result<FieldSolution> + Sync,
{
    if samples.is_empty() {
        return Err(Error::invalid("no samples to collect"));
    }
    let sols = per_sample(samples, |_, mu| solver(mu))?;
    let u: Vec<Vec<f64>> = sols.iter().map(|s| s.u.clone()).collect();
    let p: Vec<Vec<f64>> = sols.iter().map(|s| s.p.clone()).collect();
    Ok(Snapshots {
        u: columns_to_mat(&u),
        p: columns_to_mat(&p),
        mu: samples.to_vec(),
    })
}

/// Piecewise-constant gradient of a nodal scalar on the active elements
/// (zero on ghost elements).
pub fn element_gradients(mesh: &TriMesh, surr: &SurrogateDomain, p: &[f64]) -> Vec<Point> {
    (0..mesh.n_triangles())
        .map(|e| {
            if !surr.is_active(e) {
                return [0.0, 0.0];
            }
            let t = mesh.triangles()[e];
            let el = mesh.element(e);
            let mut g = [0.0, 0.0];
            for i in 0..3 {
                g[0] += p[t[i]] * el.grads[i][0];
                g[1] += p[t[i]] * el.grads[i][1];
            }
            g
        })
        .collect()
}

/// Supremizer of one pressure field: `Δs = −∇p` on the surrogate domain of
/// that sample, `s = 0` on the embedded boundary and the outer rectangle.
pub fn supremizer(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    cfg: &ProblemConfig,
    p: &[f64],
) -> Result<Vec<f64>> {
    let grads = element_gradients(mesh, surr, p);
    let (m, rhs) = assemble_poisson_sbm(mesh, surr, cfg, &grads)?;
    let sol = solve_poisson(surr, mesh.n_nodes(), &m, &rhs)?;
    Ok(sol.concat())
}

/// One supremizer column per pressure snapshot, each solved on the surrogate
/// domain of its own sample.
pub fn supremizer_snapshots<S>(
    s_p: &Mat<f64>,
    samples: &[Vec<f64>],
    mesh: &TriMesh,
    cfg: &ProblemConfig,
    surrogate: S,
) -> Result<Mat<f64>>
where
    S: Fn(&[f64]) -> Result<SurrogateDomain> + Sync,
{
    if s_p.ncols() != samples.len() || s_p.nrows() != mesh.n_nodes() {
        return Err(Error::invalid(format!(
            "pressure snapshots are {}x{}, expected {}x{}",
            s_p.nrows(),
            s_p.ncols(),
            mesh.n_nodes(),
            samples.len()
        )));
    }
    let cols = per_sample(samples, |k, mu| {
        let surr = surrogate(mu)?;
        supremizer(mesh, &surr, cfg, s_p.col_as_slice(k))
    })?;
    Ok(columns_to_mat(&cols))
}
