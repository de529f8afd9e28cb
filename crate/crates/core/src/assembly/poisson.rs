//! Scalar SBM Poisson problem `−Δs = f` with shifted Nitsche Dirichlet data on
//! the surrogate boundary and strong Dirichlet data on the outer rectangle.

use super::{local_dofs, Constraints, EliminatingBuilder, ProblemConfig};
use crate::error::{Error, Result};
use crate::geometry::{dot, SurrogateDomain};
use crate::linalg::{CsrMatrix, SparseLu};
use crate::mesh::{P1Element, Point, TriMesh};
use crate::quadrature::TRI_DEGREE4;

/// Data of a scalar Dirichlet problem.
pub struct ScalarData<'a> {
    pub source: &'a dyn Fn(Point) -> f64,
    /// Value on the true embedded boundary, evaluated at projected points.
    pub embedded: &'a dyn Fn(Point) -> f64,
    pub outer: &'a dyn Fn(Point) -> f64,
}

/// Assembles the operator and load vector over the active nodes; the source
/// is integrated with the degree-4 triangle rule.
pub fn assemble_poisson(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    alpha: f64,
    data: &ScalarData<'_>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let load = |_: usize, el: &P1Element, _: usize| {
        let mut f = [0.0; 3];
        for (bary, w) in TRI_DEGREE4.points {
            let v = w * el.area * (data.source)(el.point(*bary));
            for i in 0..3 {
                f[i] += v * bary[i];
            }
        }
        f
    };
    let (m, mut rhs) = assemble_scalar(mesh, surr, alpha, 1, &load, data.embedded, data.outer)?;
    Ok((m, rhs.swap_remove(0)))
}

/// Componentwise Poisson systems for a piecewise-constant 2D source given per
/// mesh element (ghost entries are ignored), with homogeneous boundary data.
/// The discrete operator is the positive form of `−Δ`, so passing `∇p` yields
/// the supremizer `Δs = −∇p`.
pub fn assemble_poisson_sbm(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    cfg: &ProblemConfig,
    rhs_field: &[Point],
) -> Result<(CsrMatrix, [Vec<f64>; 2])> {
    if rhs_field.len() != mesh.n_triangles() {
        return Err(Error::invalid(format!(
            "rhs field has {} entries for {} elements",
            rhs_field.len(),
            mesh.n_triangles()
        )));
    }
    let load = |e: usize, el: &P1Element, k: usize| [rhs_field[e][k] * el.area / 3.0; 3];
    let zero = |_: Point| 0.0;
    let (m, rhs) = assemble_scalar(mesh, surr, cfg.nitsche_alpha, 2, &load, &zero, &zero)?;
    let [rx, ry]: [Vec<f64>; 2] = rhs.try_into().expect("two components");
    Ok((m, [rx, ry]))
}

/// Factors once and solves for every right-hand side; results are global
/// nodal fields that vanish on ghost nodes.
pub fn solve_poisson(
    surr: &SurrogateDomain,
    n_nodes: usize,
    m: &CsrMatrix,
    rhs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let lu = SparseLu::factor(m)?;
    rhs.iter()
        .map(|b| {
            let x = crate::linalg::solve_refined(m, &lu, b)?;
            let mut out = vec![0.0; n_nodes];
            for (k, &g) in surr.active_nodes().iter().enumerate() {
                out[g] = x[k];
            }
            Ok(out)
        })
        .collect()
}

type Load<'a> = dyn Fn(usize, &P1Element, usize) -> [f64; 3] + 'a;

fn assemble_scalar(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    alpha: f64,
    n_rhs: usize,
    load: &Load<'_>,
    embedded: &dyn Fn(Point) -> f64,
    outer: &dyn Fn(Point) -> f64,
) -> Result<(CsrMatrix, Vec<Vec<f64>>)> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "penalty must be positive, got {alpha}"
        )));
    }
    if surr.is_embedded() && surr.edges().is_empty() {
        return Err(Error::invalid(
            "embedded geometry has an empty surrogate boundary",
        ));
    }
    let na = surr.n_active_nodes();
    let mut cons = Constraints::none(na);
    for be in mesh.boundary_edges() {
        for &node in &be.nodes {
            if let Some(k) = surr.active_index(node) {
                cons.set(k, outer(mesh.nodes()[node]));
            }
        }
    }
    let mut t = EliminatingBuilder::new(&cons, na, n_rhs, 9 * surr.n_active_elements());

    for e in surr.active_elements() {
        let dofs =
            local_dofs(surr, &mesh.triangles()[e]).expect("active element with a ghost vertex");
        let el = mesh.element(e);
        for i in 0..3 {
            for j in 0..3 {
                t.add(dofs[i], dofs[j], el.area * dot(el.grads[i], el.grads[j]));
            }
        }
        for k in 0..n_rhs {
            let f = load(e, &el, k);
            for i in 0..3 {
                t.add_rhs(k, dofs[i], f[i]);
            }
        }
    }

    for edge in surr.edges() {
        let e = edge.element;
        let dofs =
            local_dofs(surr, &mesh.triangles()[e]).expect("surrogate edge on a ghost element");
        let el = mesh.element(e);
        let hk = mesh.diameter(e);
        for q in &edge.points {
            let w = q.weight;
            let n = el.shape(q.point);
            let gn: [f64; 3] = std::array::from_fn(|i| dot(el.grads[i], edge.normal));
            let s: [f64; 3] =
                std::array::from_fn(|i| n[i] + dot(el.grads[i], q.projection.distance_vector));
            let gval = embedded(q.projection.surface_point);
            for i in 0..3 {
                for j in 0..3 {
                    let v = -w * n[i] * gn[j] - w * gn[i] * s[j] + alpha / hk * w * s[i] * s[j];
                    t.add(dofs[i], dofs[j], v);
                }
                let r = -w * gn[i] * gval + alpha / hk * w * s[i] * gval;
                for k in 0..n_rhs {
                    t.add_rhs(k, dofs[i], r);
                }
            }
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::mesh::Rect;
    use std::f64::consts::PI;

    #[test]
    fn zero_source_gives_zero_solution() {
        let m = TriMesh::generate_structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 80, 40).unwrap();
        let s = SurrogateDomain::build(&m, &Geometry::circle([0.1, 0.0], 0.3).unwrap(), 2).unwrap();
        let (a, rhs) = assemble_poisson_sbm(
            &m,
            &s,
            &ProblemConfig::default(),
            &vec![[0.0, 0.0]; m.n_triangles()],
        )
        .unwrap();
        let sol = solve_poisson(&s, m.n_nodes(), &a, &rhs).unwrap();
        assert!(sol.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_data_gives_symmetric_solution() {
        let m = TriMesh::generate_structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 90, 46).unwrap();
        let s =
            SurrogateDomain::build(&m, &Geometry::circle([-0.3, 0.0], 0.3).unwrap(), 2).unwrap();
        let (a, rhs) = assemble_poisson_sbm(
            &m,
            &s,
            &ProblemConfig::default(),
            &vec![[1.0, 0.5]; m.n_triangles()],
        )
        .unwrap();
        let sol = solve_poisson(&s, m.n_nodes(), &a, &rhs).unwrap();
        let mirror = |i: usize| {
            let p = m.nodes()[i];
            (0..m.n_nodes())
                .find(|&j| {
                    (m.nodes()[j][0] - p[0]).abs() < 1e-12 && (m.nodes()[j][1] + p[1]).abs() < 1e-12
                })
                .unwrap()
        };
        let scale = sol[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(scale > 1e-3);
        for i in (0..m.n_nodes()).step_by(7) {
            let j = mirror(i);
            for c in 0..2 {
                assert!(
                    (sol[c][i] - sol[c][j]).abs() < 1e-10 * scale.max(1.0),
                    "node {i}: {} vs {}",
                    sol[c][i],
                    sol[c][j]
                );
            }
        }
    }

    fn mms_error(n: usize) -> (f64, f64) {
        let m = TriMesh::generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n).unwrap();
        let geom = Geometry::circle([0.47, 0.52], 0.25).unwrap();
        let s = SurrogateDomain::build(&m, &geom, 2).unwrap();
        let exact = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let source = |p: Point| 2.0 * PI * PI * exact(p);
        let data = ScalarData {
            source: &source,
            embedded: &exact,
            outer: &exact,
        };
        let (a, b) = assemble_poisson(&m, &s, 10.0, &data).unwrap();
        let sol = solve_poisson(&s, m.n_nodes(), &a, &[b]).unwrap().remove(0);
        let mut err = 0.0;
        for e in s.active_elements() {
            let el = m.element(e);
            let t = m.triangles()[e];
            for (bary, w) in TRI_DEGREE4.points {
                let uh: f64 = (0..3).map(|i| bary[i] * sol[t[i]]).sum();
                err += w * el.area * (uh - exact(el.point(*bary))).powi(2);
            }
        }
        (m.h(), err.sqrt())
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let runs: Vec<(f64, f64)> = [24, 48, 96].iter().map(|&n| mms_error(n)).collect();
        for w in runs.windows(2) {
            let order = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
            assert!(order >= 1.9, "observed order {order:.3} from {:?}", runs);
        }
    }
}
