//! Stabilized P1–P1 Stokes operator with shifted Nitsche conditions on the
//! surrogate boundary.

use super::{local_dofs, BlockSystem, Constraints, EliminatingBuilder, ProblemConfig};
use crate::error::{Error, Result};
use crate::geometry::{dot, SurrogateDomain};
use crate::linalg::TripletBuilder;
use crate::mesh::{P1Element, Side, TriMesh};
use crate::quadrature::gauss_legendre_unit;

/// Element matrix of `(ε(w), 2ν ε(u))` on one triangle, indexed by
/// `3 * component + local_node`.
pub fn viscous_element_matrix(el: &P1Element, nu: f64) -> [[f64; 6]; 6] {
    let g = &el.grads;
    let mut m = [[0.0; 6]; 6];
    for a in 0..2 {
        for i in 0..3 {
            for b in 0..2 {
                for j in 0..3 {
                    let diag = if a == b { dot(g[i], g[j]) } else { 0.0 };
                    m[3 * a + i][3 * b + j] = nu * el.area * (diag + g[i][b] * g[j][a]);
                }
            }
        }
    }
    m
}

/// Assembles the SBM Stokes blocks with the inlet (left), slip (top and
/// bottom) and outflow (right) conditions of the channel.
pub fn assemble_stokes(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    cfg: &ProblemConfig,
) -> Result<BlockSystem> {
    let na = surr.n_active_nodes();
    let mut cons = Constraints::none(2 * na);
    for (side, comps) in [
        (Side::Left, &[0usize, 1][..]),
        (Side::Top, &[1][..]),
        (Side::Bottom, &[1][..]),
    ] {
        for node in mesh.side_nodes(side) {
            let Some(k) = surr.active_index(node) else {
                continue;
            };
            for &c in comps {
                if side == Side::Left {
                    cons.set(c * na + k, cfg.inlet_velocity[c]);
                } else {
                    cons.set_if_free(c * na + k, 0.0);
                }
            }
        }
    }
    assemble_constrained(mesh, surr, cfg, &cons)
}

pub(crate) fn assemble_constrained(
    mesh: &TriMesh,
    surr: &SurrogateDomain,
    cfg: &ProblemConfig,
    cons: &Constraints,
) -> Result<BlockSystem> {
    cfg.validate()?;
    if surr.is_embedded() && surr.edges().is_empty() {
        return Err(Error::invalid(
            "embedded geometry has an empty surrogate boundary",
        ));
    }
    let na = surr.n_active_nodes();
    let ne = surr.n_active_elements();
    let nu = cfg.nu;
    let (alpha, beta) = (cfg.nitsche_alpha, cfg.nitsche_beta);
    let g = cfg.body_force;
    let gbar = cfg.embedded_dirichlet;

    let mut a = EliminatingBuilder::new(cons, 2 * na, 1, 36 * ne);
    let mut b = TripletBuilder::with_capacity(na, 2 * na, 18 * ne);
    let mut bhat = TripletBuilder::with_capacity(na, 2 * na, 6 * surr.edges().len());
    let mut c = TripletBuilder::with_capacity(na, na, 9 * ne);
    let mut f_q = vec![0.0; na];

    // Pressure rows against a velocity column; constrained columns move to F_q.
    let push_div =
        |t: &mut TripletBuilder, f_q: &mut [f64], r: usize, col: usize, v: f64| match cons.get(col)
        {
            Some(val) => f_q[r] -= v * val,
            None => t.push(r, col, v),
        };

    for e in surr.active_elements() {
        let t = &mesh.triangles()[e];
        let dofs = local_dofs(surr, t).expect("active element with a ghost vertex");
        let el = mesh.element(e);
        let hk = mesh.diameter(e);
        let tau = cfg.stab_delta * hk * hk / (2.0 * nu);
        let ke = viscous_element_matrix(&el, nu);
        for ca in 0..2 {
            for i in 0..3 {
                let r = ca * na + dofs[i];
                for cb in 0..2 {
                    for j in 0..3 {
                        a.add(r, cb * na + dofs[j], ke[3 * ca + i][3 * cb + j]);
                    }
                }
                a.add_rhs(0, r, -g[ca] * el.area / 3.0);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for cb in 0..2 {
                    push_div(
                        &mut b,
                        &mut f_q,
                        dofs[i],
                        cb * na + dofs[j],
                        -el.grads[j][cb] * el.area / 3.0,
                    );
                }
                c.push(
                    dofs[i],
                    dofs[j],
                    -tau * el.area * dot(el.grads[i], el.grads[j]),
                );
            }
            f_q[dofs[i]] += tau * el.area * dot(el.grads[i], g);
        }
    }

    for edge in surr.edges() {
        let e = edge.element;
        let dofs =
            local_dofs(surr, &mesh.triangles()[e]).expect("surrogate edge on a ghost element");
        let el = mesh.element(e);
        let gr = &el.grads;
        let hk = mesh.diameter(e);
        let nt = edge.normal;
        for q in &edge.points {
            let w = q.weight;
            let d = q.projection.distance_vector;
            let tan = q.projection.tangent;
            let n = el.shape(q.point);
            let s: [f64; 3] = std::array::from_fn(|i| n[i] + dot(gr[i], d));
            let tg: [f64; 3] = std::array::from_fn(|i| dot(gr[i], tan));
            let gn: [f64; 3] = std::array::from_fn(|i| dot(gr[i], nt));
            for ca in 0..2 {
                for i in 0..3 {
                    let r = ca * na + dofs[i];
                    for cb in 0..2 {
                        let same = if ca == cb { 1.0 } else { 0.0 };
                        for j in 0..3 {
                            let mut v = -nu * w * n[i] * (same * gn[j] + gr[j][ca] * nt[cb]);
                            v -= nu * w * s[j] * (same * gn[i] + gr[i][cb] * nt[ca]);
                            v += same
                                * w
                                * (alpha * 2.0 * nu / hk * s[i] * s[j]
                                    + beta * 2.0 * nu * hk * tg[i] * tg[j]);
                            a.add(r, cb * na + dofs[j], v);
                        }
                    }
                    let rhs = -nu * w * (gbar[ca] * gn[i] + dot(gr[i], gbar) * nt[ca])
                        + alpha * 2.0 * nu / hk * w * s[i] * gbar[ca];
                    a.add_rhs(0, r, rhs);
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    for cb in 0..2 {
                        let col = cb * na + dofs[j];
                        push_div(&mut b, &mut f_q, dofs[i], col, w * n[i] * n[j] * nt[cb]);
                        push_div(
                            &mut bhat,
                            &mut f_q,
                            dofs[i],
                            col,
                            w * n[i] * nt[cb] * dot(gr[j], d),
                        );
                    }
                }
                f_q[dofs[i]] += w * dot(gbar, nt) * n[i];
            }
        }
    }

    let gn = cfg.outflow_traction;
    if gn != [0.0, 0.0] {
        let gauss = gauss_legendre_unit(2);
        for be in mesh
            .boundary_edges()
            .iter()
            .filter(|be| be.side == Side::Right)
        {
            if !surr.is_active(be.element) {
                continue;
            }
            let el = mesh.element(be.element);
            let [pa, pb] = be.nodes.map(|i| mesh.nodes()[i]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let dofs = local_dofs(surr, &mesh.triangles()[be.element]).expect("active element");
            for &(s, wq) in &gauss {
                let n = el.shape([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                for ca in 0..2 {
                    for i in 0..3 {
                        a.add_rhs(0, ca * na + dofs[i], wq * len * n[i] * gn[ca]);
                    }
                }
            }
        }
    }

    let (a, mut f) = a.finish();
    Ok(BlockSystem {
        a,
        b: b.build(),
        bhat: bhat.build(),
        c: c.build(),
        f_g: f.swap_remove(0),
        f_q,
        active_nodes: surr.active_nodes().to_vec(),
        n_nodes: mesh.n_nodes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::solve_fom;
    use crate::geometry::Geometry;
    use crate::mesh::Rect;

    fn channel(nx: usize, ny: usize) -> TriMesh {
        TriMesh::generate_structured(Rect::new(-2.0, 2.0, -1.0, 1.0), nx, ny).unwrap()
    }

    /// Independent oracle: build each basis gradient as a 2x2 matrix,
    /// symmetrize, and take the Frobenius product.
    fn strain_oracle(el: &P1Element, nu: f64) -> [[f64; 6]; 6] {
        let grad = |a: usize, i: usize| {
            let mut m = [[0.0; 2]; 2];
            m[a] = el.grads[i];
            m
        };
        let eps = |m: [[f64; 2]; 2]| {
            [
                [m[0][0], 0.5 * (m[0][1] + m[1][0])],
                [0.5 * (m[0][1] + m[1][0]), m[1][1]],
            ]
        };
        let mut out = [[0.0; 6]; 6];
        for r in 0..6 {
            for c in 0..6 {
                let (ew, eu) = (eps(grad(r / 3, r % 3)), eps(grad(c / 3, c % 3)));
                let frob: f64 = (0..2)
                    .flat_map(|x| (0..2).map(move |y| (x, y)))
                    .map(|(x, y)| ew[x][y] * eu[x][y])
                    .sum();
                out[r][c] = 2.0 * nu * el.area * frob;
            }
        }
        out
    }

    #[test]
    fn reference_triangle_viscous_matrix() {
        let el = P1Element::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let k = viscous_element_matrix(&el, 1.0);
        let o = strain_oracle(&el, 1.0);
        for r in 0..6 {
            for c in 0..6 {
                assert!(
                    (k[r][c] - o[r][c]).abs() < 1e-15,
                    "({r},{c}) {} vs {}",
                    k[r][c],
                    o[r][c]
                );
            }
        }
        // hand-integrated entries: grads (-1,-1), (1,0), (0,1), area 1/2
        assert!((k[0][0] - 1.5).abs() < 1e-15);
        assert!((k[1][1] - 1.0).abs() < 1e-15);
        assert!((k[2][4] - 0.5).abs() < 1e-15);
        assert!(k[1][5].abs() < 1e-15);
    }

    #[test]
    fn rigid_translation_is_strain_free() {
        let m = channel(10, 6);
        let s = SurrogateDomain::unobstructed(&m);
        let na = s.n_active_nodes();
        let sys = assemble_constrained(
            &m,
            &s,
            &ProblemConfig::default(),
            &Constraints::none(2 * na),
        )
        .unwrap();
        let mut u = vec![0.7; na];
        u.extend(vec![-0.3; na]);
        let au = sys.a.mul_vec(&u);
        let boundary: std::collections::HashSet<usize> =
            m.boundary_edges().iter().flat_map(|b| b.nodes).collect();
        for (k, &g) in s.active_nodes().iter().enumerate() {
            if !boundary.contains(&g) {
                assert!(au[k].abs() < 1e-12 && au[na + k].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stokes_blocks_have_expected_shapes_and_symmetry() {
        let m = channel(80, 40);
        let geom = Geometry::circle([-0.5, 0.1], 0.3).unwrap();
        let s = SurrogateDomain::build(&m, &geom, 2).unwrap();
        let sys = assemble_stokes(&m, &s, &ProblemConfig::default()).unwrap();
        let na = s.n_active_nodes();
        assert_eq!((sys.a.nrows(), sys.a.ncols()), (2 * na, 2 * na));
        assert_eq!((sys.b.nrows(), sys.b.ncols()), (na, 2 * na));
        assert_eq!((sys.bhat.nrows(), sys.bhat.ncols()), (na, 2 * na));
        assert_eq!((sys.c.nrows(), sys.c.ncols()), (na, na));
        assert!(sys.c.max_abs_diff(&sys.c.transpose()) <= 1e-12 * sys.c.max_abs());
        assert_eq!(sys.active_nodes.len(), na);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = channel(80, 40);
        let geom = Geometry::circle([0.0, 0.0], 0.3).unwrap();
        let s = SurrogateDomain::build(&m, &geom, 2).unwrap();
        let cfg = ProblemConfig {
            inlet_velocity: [0.0, 0.0],
            ..Default::default()
        };
        let sol = solve_fom(&assemble_stokes(&m, &s, &cfg).unwrap(), &[0.0, 0.0]).unwrap();
        assert!(sol.u.iter().chain(&sol.p).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unobstructed_channel_carries_uniform_flow() {
        let m = channel(20, 10);
        let s = SurrogateDomain::unobstructed(&m);
        let sol = solve_fom(
            &assemble_stokes(&m, &s, &ProblemConfig::default()).unwrap(),
            &[],
        )
        .unwrap();
        let nh = m.n_nodes();
        for i in 0..nh {
            assert!((sol.u[i] - 1.0).abs() < 1e-10, "u_x at {i}: {}", sol.u[i]);
            assert!(sol.u[nh + i].abs() < 1e-10);
            assert!(sol.p[i].abs() < 1e-10);
        }
    }

    #[test]
    fn solution_vanishes_on_ghost_nodes() {
        let m = channel(80, 40);
        let geom = Geometry::circle([0.2, -0.1], 0.35).unwrap();
        let s = SurrogateDomain::build(&m, &geom, 2).unwrap();
        let sol = solve_fom(
            &assemble_stokes(&m, &s, &ProblemConfig::default()).unwrap(),
            &[0.2, -0.1],
        )
        .unwrap();
        let nh = m.n_nodes();
        assert!(!s.ghost_nodes().is_empty());
        for &g in s.ghost_nodes() {
            assert_eq!((sol.u[g], sol.u[nh + g], sol.p[g]), (0.0, 0.0, 0.0));
        }
        // surrogate-boundary nodes are solved for, not pinned
        let edge_nodes: Vec<usize> = s.edges().iter().flat_map(|e| e.nodes).collect();
        assert!(edge_nodes.iter().any(|&i| sol.u[i].abs() > 1e-6));
    }

    #[test]
    fn cylinder_flow_has_stagnation_pressure_and_acceleration() {
        let m = channel(114, 57);
        let (cx, cy, r) = (-1.5, 0.2439, 0.2);
        let geom = Geometry::circle([cx, cy], r).unwrap();
        let s = SurrogateDomain::build(&m, &geom, 2).unwrap();
        let sol = solve_fom(
            &assemble_stokes(&m, &s, &ProblemConfig::default()).unwrap(),
            &[cx, cy],
        )
        .unwrap();
        let nh = m.n_nodes();
        // pressure near the obstacle peaks on its upstream face
        let near: Vec<usize> = (0..nh)
            .filter(|&i| {
                let p = m.nodes()[i];
                let rr = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
                s.active_index(i).is_some() && rr < r + 0.15
            })
            .collect();
        let imax = *near
            .iter()
            .max_by(|&&a, &&b| sol.p[a].total_cmp(&sol.p[b]))
            .unwrap();
        assert!(
            m.nodes()[imax][0] < cx,
            "pressure maximum at {:?}",
            m.nodes()[imax]
        );
        let imin = *near
            .iter()
            .min_by(|&&a, &&b| sol.p[a].total_cmp(&sol.p[b]))
            .unwrap();
        assert!(sol.p[imax] > sol.p[imin]);
        // flow speeds up in the gaps above and below
        let speed = |i: usize| (sol.u[i].powi(2) + sol.u[nh + i].powi(2)).sqrt();
        let column: Vec<usize> = (0..nh)
            .filter(|&i| (m.nodes()[i][0] - cx).abs() < 0.5 * m.h())
            .collect();
        let peak = |above: bool| {
            column
                .iter()
                .filter(|&&i| {
                    (m.nodes()[i][1] > cy + r) == above && (m.nodes()[i][1] - cy).abs() > r
                })
                .map(|&i| speed(i))
                .fold(0.0, f64::max)
        };
        assert!(
            peak(true) > 1.0 && peak(false) > 1.0,
            "gap peaks {} {}",
            peak(true),
            peak(false)
        );
    }
}
