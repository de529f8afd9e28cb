//! Surrogate domain: the union of background elements lying entirely in the
//! fluid, and its boundary edges facing the obstacle.

use super::{dot, Geometry, Projection};
use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::gauss_legendre_unit;

/// Vertices with `signed_distance >= -CLASSIFY_TOL` count as fluid.
pub const CLASSIFY_TOL: f64 = 1e-12;

/// Minimum number of elements (of size `h`) across the obstacle.
pub const MIN_ELEMENTS_ACROSS: f64 = 8.0;

#[derive(Debug, Clone, Copy)]
pub struct SurrogatePoint {
    /// Quadrature point `x̃` on the surrogate edge.
    pub point: Point,
    /// Quadrature weight including the edge length.
    pub weight: f64,
    pub projection: Projection,
}

#[derive(Debug, Clone)]
pub struct SurrogateEdge {
    /// Edge endpoints, counter-clockwise with respect to `element`.
    pub nodes: [usize; 2],
    /// Owning active element.
    pub element: usize,
    pub ghost_element: usize,
    /// Unit normal pointing from the active into the ghost element.
    pub normal: Point,
    pub length: f64,
    pub points: Vec<SurrogatePoint>,
}

#[derive(Debug, Clone)]
pub struct SurrogateDomain {
    active: Vec<bool>,
    node_map: Vec<Option<usize>>,
    active_nodes: Vec<usize>,
    ghost_nodes: Vec<usize>,
    edges: Vec<SurrogateEdge>,
    embedded: bool,
}

impl SurrogateDomain {
    /// Whole mesh active, no embedded boundary.
    pub fn unobstructed(mesh: &TriMesh) -> Self {
        Self::from_active(mesh, vec![true; mesh.n_triangles()], Vec::new(), false)
    }

    fn from_active(
        mesh: &TriMesh,
        active: Vec<bool>,
        edges: Vec<SurrogateEdge>,
        embedded: bool,
    ) -> Self {
        let mut touched = vec![false; mesh.n_nodes()];
        for (e, t) in mesh.triangles().iter().enumerate() {
            if active[e] {
                for &i in t {
                    touched[i] = true;
                }
            }
        }
        let mut node_map = vec![None; mesh.n_nodes()];
        let mut active_nodes = Vec::new();
        let mut ghost_nodes = Vec::new();
        for (i, &t) in touched.iter().enumerate() {
            if t {
                node_map[i] = Some(active_nodes.len());
                active_nodes.push(i);
            } else {
                ghost_nodes.push(i);
            }
        }
        Self {
            active,
            node_map,
            active_nodes,
            ghost_nodes,
            edges,
            embedded,
        }
    }

    /// Classifies elements against `geom` and builds the surrogate edges with
    /// `quad_points` Gauss points each.
    pub fn build(mesh: &TriMesh, geom: &Geometry, quad_points: usize) -> Result<Self> {
        if !(1..=3).contains(&quad_points) {
            return Err(Error::invalid(format!(
                "edge quadrature supports 1..=3 points, got {quad_points}"
            )));
        }
        let gb = geom.bbox();
        let mb = mesh.bbox();
        if !(gb.xmin > mb.xmin && gb.xmax < mb.xmax && gb.ymin > mb.ymin && gb.ymax < mb.ymax) {
            return Err(Error::invalid(
                "obstacle is not strictly inside the background rectangle",
            ));
        }
        let across = gb.width().max(gb.height()) / mesh.h();
        if across < MIN_ELEMENTS_ACROSS {
            return Err(Error::Resolution(format!(
                "obstacle spans {across:.2} elements, at least {MIN_ELEMENTS_ACROSS} required"
            )));
        }

        let fluid: Vec<bool> = mesh
            .nodes()
            .iter()
            .map(|&p| geom.in_fluid_closure(p, CLASSIFY_TOL))
            .collect();
        let active: Vec<bool> = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(e, t)| {
                t.iter().all(|&i| fluid[i]) && strictly_fluid(geom, mesh.element(e).centroid)
            })
            .collect();
        if !active.iter().any(|&a| a) {
            return Err(Error::invalid(
                "no active elements: the obstacle covers the whole mesh",
            ));
        }

        let gauss = gauss_legendre_unit(quad_points);
        let mut edges = Vec::new();
        for (e, t) in mesh.triangles().iter().enumerate() {
            if !active[e] {
                continue;
            }
            for k in 0..3 {
                let Some(nb) = mesh.neighbour(e, k) else {
                    continue;
                };
                if active[nb] {
                    continue;
                }
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
                let tv = [pb[0] - pa[0], pb[1] - pa[1]];
                let length = (tv[0] * tv[0] + tv[1] * tv[1]).sqrt();
                let normal = [tv[1] / length, -tv[0] / length];
                let points = gauss
                    .iter()
                    .map(|&(s, w)| {
                        let x = [pa[0] + s * tv[0], pa[1] + s * tv[1]];
                        SurrogatePoint {
                            point: x,
                            weight: w * length,
                            projection: geom.closest_point(x),
                        }
                    })
                    .collect::<Vec<_>>();
                for q in &points {
                    let nn = dot(q.projection.normal, normal);
                    if nn < -CLASSIFY_TOL {
                        return Err(Error::Resolution(format!(
                            "n·ñ = {nn:.3e} < 0 on surrogate edge ({a}, {b}) of element {e} at ({:.6}, {:.6}); \
                             the mesh is too coarse for the boundary curvature",
                            q.point[0], q.point[1]
                        )));
                    }
                }
                edges.push(SurrogateEdge {
                    nodes: [a, b],
                    element: e,
                    ghost_element: nb,
                    normal,
                    length,
                    points,
                });
            }
        }
        if edges.is_empty() {
            return Err(Error::invalid("obstacle produced no surrogate boundary"));
        }
        Ok(Self::from_active(mesh, active, edges, true))
    }

    pub fn is_active(&self, element: usize) -> bool {
        self.active[element]
    }

    pub fn active_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(e, _)| e)
    }

    pub fn ghost_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| !a)
            .map(|(e, _)| e)
    }

    pub fn n_active_elements(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Global node index of each active unknown, ascending.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active_nodes
    }

    pub fn n_active_nodes(&self) -> usize {
        self.active_nodes.len()
    }

    /// Active index of a global node, `None` for ghost nodes.
    pub fn active_index(&self, node: usize) -> Option<usize> {
        self.node_map[node]
    }

    pub fn ghost_nodes(&self) -> &[usize] {
        &self.ghost_nodes
    }

    pub fn edges(&self) -> &[SurrogateEdge] {
        &self.edges
    }

    /// `true` when built from an obstacle (as opposed to [`Self::unobstructed`]).
    pub fn is_embedded(&self) -> bool {
        self.embedded
    }

    pub fn active_area(&self, mesh: &TriMesh) -> f64 {
        self.active_elements().map(|e| mesh.element(e).area).sum()
    }

    /// Smallest `n·ñ` over all surrogate quadrature points.
    pub fn min_normal_alignment(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| {
                e.points
                    .iter()
                    .map(move |q| dot(q.projection.normal, e.normal))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn n_ambiguous_projections(&self) -> usize {
        self.edges
            .iter()
            .flat_map(|e| &e.points)
            .filter(|q| q.projection.ambiguous)
            .count()
    }
}

fn strictly_fluid(geom: &Geometry, p: Point) -> bool {
    match geom {
        Geometry::Circle { .. } => geom.signed_distance(p) > 0.0,
        Geometry::Polyline(_) => geom.in_fluid_closure(p, -f64::MIN_POSITIVE),
    }
}
