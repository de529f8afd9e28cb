//! Background triangulations of a rectangle and the P1 mass matrix.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};

pub type Point = [f64; 2];

/// Tolerance used to attach boundary edges to a side of the bounding box.
pub const BOUNDARY_TAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub element: usize,
    pub side: Side,
}

/// A P1 triangulation with counter-clockwise elements.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Element -> neighbour across the edge opposite local vertex `k`.
    neighbours: Vec<[Option<usize>; 3]>,
    diameters: Vec<f64>,
    h: f64,
    bbox: Rect,
}

/// Constant-gradient data of one P1 element.
#[derive(Debug, Clone, Copy)]
pub struct P1Element {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the three barycentric shape functions.
    pub grads: [Point; 3],
    pub centroid: Point,
}

impl P1Element {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / det;
        let grad = |a: Point, b: Point| [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
        Self {
            vertices,
            area: 0.5 * det,
            grads: [grad(p1, p2), grad(p2, p0), grad(p0, p1)],
            centroid: [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0],
        }
    }

    /// Shape function values at `x` (linear extension outside the element).
    #[inline]
    pub fn shape(&self, x: Point) -> [f64; 3] {
        let dx = [x[0] - self.centroid[0], x[1] - self.centroid[1]];
        let f = |g: Point| 1.0 / 3.0 + g[0] * dx[0] + g[1] * dx[1];
        [f(self.grads[0]), f(self.grads[1]), f(self.grads[2])]
    }

    /// Maps barycentric coordinates to a physical point.
    pub fn point(&self, bary: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl TriMesh {
    /// Builds a mesh from raw connectivity, fixing clockwise elements and
    /// tagging boundary edges against the bounding box.
    pub fn from_parts(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::invalid(
                "mesh needs at least one node and one triangle",
            ));
        }
        for (e, t) in triangles.iter_mut().enumerate() {
            if t.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::invalid(format!(
                    "triangle {e} references a missing node"
                )));
            }
            let el = P1Element::new([nodes[t[0]], nodes[t[1]], nodes[t[2]]]);
            let scale = (0..3)
                .map(|k| dist(el.vertices[k], el.vertices[(k + 1) % 3]))
                .fold(0.0, f64::max);
            if el.area.abs() <= 1e-14 * scale * scale {
                return Err(Error::invalid(format!("triangle {e} is degenerate")));
            }
            if el.area < 0.0 {
                t.swap(1, 2);
            }
        }

        let bbox = nodes.iter().fold(
            Rect::new(
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |r, p| {
                Rect::new(
                    r.xmin.min(p[0]),
                    r.xmax.max(p[0]),
                    r.ymin.min(p[1]),
                    r.ymax.max(p[1]),
                )
            },
        );
        if bbox.width() <= 0.0 || bbox.height() <= 0.0 {
            return Err(Error::invalid("mesh bounding box is degenerate"));
        }

        // Edge (sorted node pair) -> (element, local opposite vertex)
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> =
            HashMap::with_capacity(triangles.len() * 2);
        for (e, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((e, k));
            }
        }
        let mut neighbours = vec![[None; 3]; triangles.len()];
        let mut boundary_edges = Vec::new();
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let owners = &edges[&key];
            match owners.as_slice() {
                [(e0, k0), (e1, k1)] => {
                    neighbours[*e0][*k0] = Some(*e1);
                    neighbours[*e1][*k1] = Some(*e0);
                }
                [(e, k)] => {
                    let t = triangles[*e];
                    let (a, b) = (t[(*k + 1) % 3], t[(*k + 2) % 3]);
                    let side = tag_side(&bbox, nodes[a], nodes[b]).ok_or_else(|| {
                        Error::invalid(format!(
                            "boundary edge ({a}, {b}) does not lie on the bounding rectangle"
                        ))
                    })?;
                    boundary_edges.push(BoundaryEdge {
                        nodes: [a, b],
                        element: *e,
                        side,
                    });
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "edge {key:?} is shared by {} triangles",
                        owners.len()
                    )))
                }
            }
        }

        let diameters: Vec<f64> = triangles
            .iter()
            .map(|t| {
                let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
                dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
            })
            .collect();
        let h = diameters.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
            neighbours,
            diameters,
            h,
            bbox,
        })
    }

    /// Structured crisscross mesh: every cell is split along one diagonal,
    /// alternating in a checkerboard that is mirrored across the horizontal
    /// midline (exactly symmetric when `ny` is even).
    pub fn generate_structured(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        if !(rect.width() > 0.0 && rect.height() > 0.0) {
            return Err(Error::invalid(format!("degenerate rectangle {rect:?}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("nx and ny must be positive"));
        }
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny {
                rect.ymax
            } else {
                rect.ymin + rect.height() * j as f64 / ny as f64
            };
            for i in 0..=nx {
                let x = if i == nx {
                    rect.xmax
                } else {
                    rect.xmin + rect.width() * i as f64 / nx as f64
                };
                nodes.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            let upper = j >= ny - ny / 2 && ny % 2 == 0 || j > ny / 2;
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                // '/' joins a-c, '\' joins b-d; the upper half mirrors the lower.
                let slash = if upper {
                    (i + (ny - 1 - j)) % 2 == 1
                } else {
                    (i + j) % 2 == 0
                };
                if slash {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        Self::from_parts(nodes, triangles)
    }

    /// Loads the plain-text format: `N_nodes N_triangles`, then node lines
    /// `x y`, then triangle lines `i j k` (0-based).
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::invalid(format!("mesh file truncated while reading {what}")))
        };
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::invalid(format!("bad integer {s:?}: {e}")))
        };
        let parse_f64 = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad float {s:?}: {e}")))
        };
        let n_nodes = parse_usize(next("header")?)?;
        let n_tris = parse_usize(next("header")?)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            nodes.push([parse_f64(next("node")?)?, parse_f64(next("node")?)?]);
        }
        let mut triangles = Vec::with_capacity(n_tris);
        for _ in 0..n_tris {
            triangles.push([
                parse_usize(next("triangle")?)?,
                parse_usize(next("triangle")?)?,
                parse_usize(next("triangle")?)?,
            ]);
        }
        Self::from_parts(nodes, triangles)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.nodes.len(), self.triangles.len());
        for p in &self.nodes {
            s.push_str(&format!("{:.17e} {:.17e}\n", p[0], p[1]));
        }
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Neighbour of element `e` across the edge opposite its local vertex `k`.
    pub fn neighbour(&self, e: usize, k: usize) -> Option<usize> {
        self.neighbours[e][k]
    }

    /// Element diameter `h_K` (longest edge).
    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn element(&self, e: usize) -> P1Element {
        let t = self.triangles[e];
        P1Element::new([self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|e| self.element(e).area).sum()
    }

    /// Nodes lying on the given side of the bounding rectangle.
    pub fn side_nodes(&self, side: Side) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|b| b.side == side)
            .flat_map(|b| b.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// SHA-256 over node coordinates and connectivity, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.nodes.len() as u64).to_le_bytes());
        for p in &self.nodes {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        h.update((self.triangles.len() as u64).to_le_bytes());
        for t in &self.triangles {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

fn tag_side(bbox: &Rect, a: Point, b: Point) -> Option<Side> {
    let tol = BOUNDARY_TAG_TOL * bbox.width().max(bbox.height()).max(1.0);
    let on = |v: f64, target: f64| (v - target).abs() <= tol;
    if on(a[0], bbox.xmin) && on(b[0], bbox.xmin) {
        Some(Side::Left)
    } else if on(a[0], bbox.xmax) && on(b[0], bbox.xmax) {
        Some(Side::Right)
    } else if on(a[1], bbox.ymin) && on(b[1], bbox.ymin) {
        Some(Side::Bottom)
    } else if on(a[1], bbox.ymax) && on(b[1], bbox.ymax) {
        Some(Side::Top)
    } else {
        None
    }
}

/// Exact P1 element mass matrix `(area / 12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let (d, o) = (area / 6.0, area / 12.0);
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Consistent P1 mass matrix over the whole background mesh.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    matrix: CsrMatrix,
}

impl MassMatrix {
    pub fn assemble(mesh: &TriMesh) -> Self {
        let mut b =
            TripletBuilder::with_capacity(mesh.n_nodes(), mesh.n_nodes(), 9 * mesh.n_triangles());
        for (e, t) in mesh.triangles().iter().enumerate() {
            let me = element_mass(mesh.element(e).area);
            for i in 0..3 {
                for j in 0..3 {
                    b.push(t[i], t[j], me[i][j]);
                }
            }
        }
        Self { matrix: b.build() }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(u, v)_M` for scalar nodal fields.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mu = self.matrix.mul_vec(u);
        mu.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Inner product for fields with `u.len() / dim()` components stored
    /// component-major, using the block-diagonal extension of `M`.
    pub fn inner_blocks(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(u.len(), v.len());
        assert_eq!(
            u.len() % n,
            0,
            "field length is not a multiple of the node count"
        );
        u.chunks(n)
            .zip(v.chunks(n))
            .map(|(a, b)| self.inner(a, b))
            .sum()
    }

    pub fn norm_blocks(&self, u: &[f64]) -> f64 {
        self.inner_blocks(u, u).max(0.0).sqrt()
    }

    /// `M x` applied blockwise.
    pub fn apply_blocks(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        u.chunks(n).flat_map(|c| self.matrix.mul_vec(c)).collect()
    }
}
