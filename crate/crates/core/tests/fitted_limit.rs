mod common;

use common::{
    fitted_nitsche, fitted_poisson_constant, relative_difference, to_global, vec_to_global,
};
use sbm_rom::assembly::{assemble_stokes, ProblemConfig};
use sbm_rom::geometry::{Geometry, SurrogateDomain};
use sbm_rom::mesh::{Rect, TriMesh};
use sbm_rom::rom::supremizer;

fn square_hole() -> Rect {
    Rect::new(0.5, 1.25, 0.125, 0.875)
}

fn config() -> ProblemConfig {
    ProblemConfig {
        nu: 0.7,
        body_force: [0.3, -1.1],
        inlet_velocity: [1.0, 0.25],
        embedded_dirichlet: [0.2, -0.4],
        nitsche_alpha: 12.0,
        nitsche_beta: 0.5,
        stab_delta: 0.15,
        ..ProblemConfig::default()
    }
}

#[test]
fn mesh_aligned_obstacle_matches_fitted_nitsche() {
    let mesh = TriMesh::generate_structured(Rect::new(0.0, 2.0, 0.0, 1.0), 32, 16).unwrap();
    let r = square_hole();
    let geom = Geometry::polygon(vec![
        [r.xmin, r.ymin],
        [r.xmax, r.ymin],
        [r.xmax, r.ymax],
        [r.xmin, r.ymax],
    ])
    .unwrap();
    let surr = SurrogateDomain::build(&mesh, &geom, 2).unwrap();
    for e in surr.edges() {
        for q in &e.points {
            assert!(q.projection.distance_vector.iter().all(|d| d.abs() < 1e-14));
        }
    }
    let cfg = config();
    let sys = assemble_stokes(&mesh, &surr, &cfg).unwrap();
    let oracle = fitted_nitsche(&mesh, r, &cfg);

    assert!(relative_difference(&to_global(&sys.a, &sys), &oracle.a) <= 1e-12);
    assert!(relative_difference(&to_global(&sys.b, &sys), &oracle.b) <= 1e-12);
    assert!(relative_difference(&to_global(&sys.c, &sys), &oracle.c) <= 1e-12);
    assert!(sys.bhat.max_abs() <= 1e-14);
    assert!(relative_difference(&vec_to_global(&sys.f_g, &sys), &oracle.f_g) <= 1e-12);
    assert!(relative_difference(&vec_to_global(&sys.f_q, &sys), &oracle.f_q) <= 1e-12);
}

#[test]
fn supremizer_of_linear_pressure_matches_fitted_poisson() {
    let mesh = TriMesh::generate_structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 40, 20).unwrap();
    let surr = SurrogateDomain::unobstructed(&mesh);
    let p: Vec<f64> = mesh.nodes().iter().map(|q| q[0]).collect();
    let s = supremizer(&mesh, &surr, &ProblemConfig::default(), &p).unwrap();
    let reference = fitted_poisson_constant(&mesh, 1.0);
    let nh = mesh.n_nodes();
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.1);
    for k in 0..nh {
        assert!(
            (s[k] - reference[k]).abs() <= 1e-10 * scale,
            "node {k}: {} vs {}",
            s[k],
            reference[k]
        );
        assert!(s[nh + k].abs() <= 1e-10 * scale);
    }
}
