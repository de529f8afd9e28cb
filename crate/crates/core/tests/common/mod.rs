//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use sbm_rom::assembly::{BlockSystem, ProblemConfig};
use sbm_rom::linalg::{sparse_solve, TripletBuilder};
use sbm_rom::mesh::{Point, Rect, TriMesh};

/// Sparse matrix keyed by `(row, col)` over global degrees of freedom.
pub type Entries = BTreeMap<(usize, usize), f64>;

/// Velocity dof `(component, node)` flattened as `component * n_nodes + node`.
fn vdof(nh: usize, c: usize, node: usize) -> usize {
    c * nh + node
}

/// Gradients of the three P1 hat functions, from the vertex coordinates.
fn hat_gradients(p: [Point; 3]) -> ([Point; 3], f64) {
    let (x, y) = (p.map(|q| q[0]), p.map(|q| q[1]));
    let det = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(y[j] - y[k]) / det, (x[k] - x[j]) / det];
    }
    (g, 0.5 * det.abs())
}

/// Symmetric gradient of `φ_i e_c`.
fn strain(g: Point, c: usize) -> [[f64; 2]; 2] {
    let mut grad = [[0.0; 2]; 2];
    grad[c] = g;
    [
        [grad[0][0], 0.5 * (grad[0][1] + grad[1][0])],
        [0.5 * (grad[0][1] + grad[1][0]), grad[1][1]],
    ]
}

fn mat_vec(m: [[f64; 2]; 2], v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Blocks of a fitted Nitsche discretization in global numbering.
pub struct FittedBlocks {
    pub a: Entries,
    pub b: Entries,
    pub c: Entries,
    pub f_g: BTreeMap<usize, f64>,
    pub f_q: BTreeMap<usize, f64>,
}

/// Fitted Nitsche Stokes assembly on the mesh elements outside the
/// axis-aligned `hole`, whose sides must lie on mesh lines. Boundary integrals
/// are evaluated exactly; channel conditions (inlet on the left, `u_y = 0` on
/// top and bottom) are eliminated keeping the original diagonal.
pub fn fitted_nitsche(mesh: &TriMesh, hole: Rect, cfg: &ProblemConfig) -> FittedBlocks {
    let nh = mesh.n_nodes();
    let nodes = mesh.nodes();
    let eps = 1e-12;
    let inside =
        |p: Point| p[0] > hole.xmin && p[0] < hole.xmax && p[1] > hole.ymin && p[1] < hole.ymax;
    let on_hole = |p: Point| {
        let in_x = p[0] >= hole.xmin - eps && p[0] <= hole.xmax + eps;
        let in_y = p[1] >= hole.ymin - eps && p[1] <= hole.ymax + eps;
        (in_x && ((p[1] - hole.ymin).abs() < eps || (p[1] - hole.ymax).abs() < eps))
            || (in_y && ((p[0] - hole.xmin).abs() < eps || (p[0] - hole.xmax).abs() < eps))
    };
    let (nu, alpha, beta, delta) = (cfg.nu, cfg.nitsche_alpha, cfg.nitsche_beta, cfg.stab_delta);
    let (g, gbar) = (cfg.body_force, cfg.embedded_dirichlet);

    let mut a = Entries::new();
    let mut b = Entries::new();
    let mut c = Entries::new();
    let mut f_g: BTreeMap<usize, f64> = BTreeMap::new();
    let mut f_q: BTreeMap<usize, f64> = BTreeMap::new();
    let add = |m: &mut Entries, r: usize, col: usize, v: f64| *m.entry((r, col)).or_default() += v;

    for t in mesh.triangles() {
        let p = t.map(|i| nodes[i]);
        let centroid = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        if inside(centroid) {
            continue;
        }
        let (gr, area) = hat_gradients(p);
        let hk = (0..3)
            .map(|i| {
                let (u, v) = (p[i], p[(i + 1) % 3]);
                (u[0] - v[0]).hypot(u[1] - v[1])
            })
            .fold(0.0, f64::max);
        let tau = delta * hk * hk / (2.0 * nu);
        for i in 0..3 {
            for ca in 0..2 {
                *f_g.entry(vdof(nh, ca, t[i])).or_default() -= g[ca] * area / 3.0;
                for j in 0..3 {
                    for cb in 0..2 {
                        let (ew, eu) = (strain(gr[i], ca), strain(gr[j], cb));
                        let frob: f64 = (0..2)
                            .map(|x| (0..2).map(|y| ew[x][y] * eu[x][y]).sum::<f64>())
                            .sum();
                        add(
                            &mut a,
                            vdof(nh, ca, t[i]),
                            vdof(nh, cb, t[j]),
                            2.0 * nu * area * frob,
                        );
                    }
                }
            }
            for j in 0..3 {
                for cb in 0..2 {
                    // −(∇·w, q) with w = φ_j e_cb, q = φ_i
                    add(&mut b, t[i], vdof(nh, cb, t[j]), -gr[j][cb] * area / 3.0);
                }
                add(&mut c, t[i], t[j], -tau * area * dot(gr[i], gr[j]));
            }
            *f_q.entry(t[i]).or_default() += tau * area * dot(gr[i], g);
        }

        for k in 0..3 {
            let (la, lb) = ((k + 1) % 3, (k + 2) % 3);
            let (pa, pb) = (p[la], p[lb]);
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if !(on_hole(pa) && on_hole(pb) && on_hole(mid)) {
                continue;
            }
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let tan = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
            let mut n = [tan[1], -tan[0]];
            if dot(n, [centroid[0] - mid[0], centroid[1] - mid[1]]) > 0.0 {
                n = [-n[0], -n[1]];
            }
            // exact edge integrals of products of hats; the opposite vertex vanishes on the edge
            let on_edge = |i: usize| i == la || i == lb;
            let int1 = |i: usize| if on_edge(i) { len / 2.0 } else { 0.0 };
            let int2 = |i: usize, j: usize| match (on_edge(i), on_edge(j)) {
                (true, true) => len / 6.0 * if i == j { 2.0 } else { 1.0 },
                _ => 0.0,
            };
            for i in 0..3 {
                for ca in 0..2 {
                    let r = vdof(nh, ca, t[i]);
                    let ew = strain(gr[i], ca);
                    for j in 0..3 {
                        for cb in 0..2 {
                            let eu = strain(gr[j], cb);
                            // −⟨w ⊗ n, 2ν ε(u)⟩
                            let mut v = -2.0 * nu * int1(i) * mat_vec(eu, n)[ca];
                            // −⟨2ν ε(w), u ⊗ n⟩
                            v -= 2.0 * nu * int1(j) * mat_vec(ew, n)[cb];
                            if ca == cb {
                                v += alpha * 2.0 * nu / hk * int2(i, j);
                                v += beta * 2.0 * nu * hk * dot(gr[i], tan) * dot(gr[j], tan) * len;
                            }
                            add(&mut a, r, vdof(nh, cb, t[j]), v);
                        }
                    }
                    let mut rhs = -2.0 * nu * len * dot(mat_vec(ew, n), gbar);
                    rhs += alpha * 2.0 * nu / hk * int1(i) * gbar[ca];
                    *f_g.entry(r).or_default() += rhs;
                }
                for j in 0..3 {
                    for cb in 0..2 {
                        add(&mut b, t[i], vdof(nh, cb, t[j]), int2(i, j) * n[cb]);
                    }
                }
                *f_q.entry(t[i]).or_default() += int1(i) * dot(gbar, n);
            }
        }
    }

    // channel conditions
    let bb = mesh.bbox();
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, q) in nodes.iter().enumerate() {
        if (q[0] - bb.xmin).abs() < 1e-9 {
            fixed.insert(vdof(nh, 0, k), cfg.inlet_velocity[0]);
            fixed.insert(vdof(nh, 1, k), cfg.inlet_velocity[1]);
        }
    }
    for (k, q) in nodes.iter().enumerate() {
        if (q[1] - bb.ymin).abs() < 1e-9 || (q[1] - bb.ymax).abs() < 1e-9 {
            fixed.entry(vdof(nh, 1, k)).or_insert(0.0);
        }
    }
    let mut a_out = Entries::new();
    for (&(r, col), &v) in &a {
        match (fixed.get(&r), fixed.get(&col)) {
            (Some(_), _) => {}
            (None, Some(&gv)) => *f_g.entry(r).or_default() -= v * gv,
            (None, None) => {
                a_out.insert((r, col), v);
            }
        }
    }
    for (&r, &gv) in &fixed {
        if !f_g.contains_key(&r) {
            continue; // ghost node, no unknown
        }
        let d = a.get(&(r, r)).copied().filter(|&d| d != 0.0).unwrap_or(1.0);
        a_out.insert((r, r), d);
        f_g.insert(r, d * gv);
    }
    let mut b_out = Entries::new();
    for (&(r, col), &v) in &b {
        match fixed.get(&col) {
            Some(&gv) => *f_q.entry(r).or_default() -= v * gv,
            None => {
                b_out.insert((r, col), v);
            }
        }
    }
    FittedBlocks {
        a: a_out,
        b: b_out,
        c,
        f_g,
        f_q,
    }
}

/// Converts an assembled block from component-major active numbering to
/// global numbering.
pub fn to_global(m: &sbm_rom::linalg::CsrMatrix, sys: &BlockSystem) -> Entries {
    let (na, nh) = (sys.n_active(), sys.n_nodes);
    let map = |k: usize| (k / na) * nh + sys.active_nodes[k % na];
    let mut out = Entries::new();
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            *out.entry((map(i), map(j))).or_default() += v;
        }
    }
    out
}

pub fn vec_to_global(v: &[f64], sys: &BlockSystem) -> BTreeMap<usize, f64> {
    let (na, nh) = (sys.n_active(), sys.n_nodes);
    v.iter()
        .enumerate()
        .map(|(k, &x)| ((k / na) * nh + sys.active_nodes[k % na], x))
        .collect()
}

/// `max |x − y| / max(|x|, |y|)` over the union of keys.
pub fn relative_difference<K: Ord + Copy>(x: &BTreeMap<K, f64>, y: &BTreeMap<K, f64>) -> f64 {
    let scale = x
        .values()
        .chain(y.values())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let diff = x
        .keys()
        .chain(y.keys())
        .map(|k| (x.get(k).copied().unwrap_or(0.0) - y.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    diff / scale
}

/// Fitted P1 solution of `−Δs = f` (constant `f`) on the whole mesh with
/// `s = 0` on the outer rectangle.
pub fn fitted_poisson_constant(mesh: &TriMesh, f: f64) -> Vec<f64> {
    let n = mesh.n_nodes();
    let bb = mesh.bbox();
    let on_box = |p: Point| {
        (p[0] - bb.xmin).abs() < 1e-9
            || (p[0] - bb.xmax).abs() < 1e-9
            || (p[1] - bb.ymin).abs() < 1e-9
            || (p[1] - bb.ymax).abs() < 1e-9
    };
    let fixed: Vec<bool> = mesh.nodes().iter().map(|&p| on_box(p)).collect();
    let mut t = TripletBuilder::new(n, n);
    let mut rhs = vec![0.0; n];
    for tri in mesh.triangles() {
        let (gr, area) = hat_gradients(tri.map(|i| mesh.nodes()[i]));
        for i in 0..3 {
            if fixed[tri[i]] {
                continue;
            }
            rhs[tri[i]] += f * area / 3.0;
            for j in 0..3 {
                if !fixed[tri[j]] {
                    t.push(tri[i], tri[j], area * dot(gr[i], gr[j]));
                }
            }
        }
    }
    for k in 0..n {
        if fixed[k] {
            t.push(k, k, 1.0);
        }
    }
    sparse_solve(&t.build(), &rhs).expect("fitted Poisson solve")
}
