//! Parametrized embedded obstacles, signed distances and closest-point
//! projections.
//!
//! Normal convention: [`Projection::normal`] is the outward unit normal of
//! the *fluid* domain, so it points into the obstacle, and the distance
//! vector from a fluid point is `d = |d| n`.

mod ffd;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Point, Rect};

pub use ffd::FfdLattice;
pub use surrogate::{SurrogateDomain, SurrogateEdge, SurrogatePoint, CLASSIFY_TOL};

/// Distance ties closer than this are reported as ambiguous projections.
pub const TIE_TOL: f64 = 1e-12;

/// A family of obstacles indexed by a parameter vector `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryFamily {
    /// Disk of fixed radius. Center coordinates that are not fixed become
    /// parameters, in `(x, y)` order.
    Circle {
        radius: f64,
        #[serde(default)]
        fixed_x: Option<f64>,
        #[serde(default)]
        fixed_y: Option<f64>,
    },
    /// Polyline circle morphed by a cubic Bernstein lattice; the two interior
    /// control points of the left lattice column move horizontally by
    /// `mu[0]` and `mu[1]`.
    Ffd {
        center: Point,
        radius: f64,
        /// Half side of the square lattice box centred on the circle.
        lattice_half_width: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// Fixed polygon (no parameters).
    Polygon { vertices: Vec<Point> },
}

fn default_segments() -> usize {
    512
}

impl GeometryFamily {
    pub fn n_params(&self) -> usize {
        match self {
            GeometryFamily::Circle {
                fixed_x, fixed_y, ..
            } => usize::from(fixed_x.is_none()) + usize::from(fixed_y.is_none()),
            GeometryFamily::Ffd { .. } => 2,
            GeometryFamily::Polygon { .. } => 0,
        }
    }

    pub fn instantiate(&self, mu: &[f64]) -> Result<Geometry> {
        if mu.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "geometry expects {} parameters, got {}",
                self.n_params(),
                mu.len()
            )));
        }
        if let Some(v) = mu.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite parameter {v}")));
        }
        match *self {
            GeometryFamily::Circle {
                radius,
                fixed_x,
                fixed_y,
            } => {
                let mut it = mu.iter().copied();
                let x = fixed_x.unwrap_or_else(|| it.next().unwrap());
                let y = fixed_y.unwrap_or_else(|| it.next().unwrap());
                Geometry::circle([x, y], radius)
            }
            GeometryFamily::Ffd {
                center,
                radius,
                lattice_half_width,
                segments,
            } => {
                if !(radius > 0.0 && lattice_half_width > radius) {
                    return Err(Error::invalid("ffd lattice box must enclose the circle"));
                }
                if segments < 3 {
                    return Err(Error::invalid("ffd circle needs at least 3 segments"));
                }
                let b = Rect::new(
                    center[0] - lattice_half_width,
                    center[0] + lattice_half_width,
                    center[1] - lattice_half_width,
                    center[1] + lattice_half_width,
                );
                let mut lattice = FfdLattice::new(b, 3, 3);
                lattice.displace(0, 1, [mu[0], 0.0]);
                lattice.displace(0, 2, [mu[1], 0.0]);
                let pts = (0..segments)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                        lattice
                            .apply([center[0] + radius * th.cos(), center[1] + radius * th.sin()])
                    })
                    .collect();
                Ok(Geometry::Polyline(ClosedPolyline::new(pts)?))
            }
            GeometryFamily::Polygon { ref vertices } => {
                Ok(Geometry::Polyline(ClosedPolyline::new(vertices.clone())?))
            }
        }
    }
}

/// Result of a closest-point projection from a point `x̃` onto the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Closest point `x` on the boundary.
    pub surface_point: Point,
    /// `d = x − x̃`.
    pub distance_vector: Point,
    /// Unit normal at `x`, outward from the fluid (into the obstacle).
    pub normal: Point,
    /// `normal` rotated by +90°.
    pub tangent: Point,
    /// Several boundary points were equally close; the one with the smallest
    /// curve parameter was chosen.
    pub ambiguous: bool,
}

impl Projection {
    fn new(from: Point, surface_point: Point, normal: Point, ambiguous: bool) -> Self {
        Self {
            surface_point,
            distance_vector: [surface_point[0] - from[0], surface_point[1] - from[1]],
            normal,
            tangent: [-normal[1], normal[0]],
            ambiguous,
        }
    }
}

/// A concrete obstacle.
#[derive(Debug, Clone)]
pub enum Geometry {
    Circle { center: Point, radius: f64 },
    Polyline(ClosedPolyline),
}

impl Geometry {
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Geometry::Circle { center, radius })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Ok(Geometry::Polyline(ClosedPolyline::new(vertices)?))
    }

    /// Negative inside the obstacle, positive in the fluid.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            Geometry::Circle { center, radius } => norm(sub(p, *center)) - radius,
            Geometry::Polyline(pl) => pl.signed_distance(p),
        }
    }

    /// `signed_distance(p) >= -tol`, with a cheap bounding-box early out.
    pub fn in_fluid_closure(&self, p: Point, tol: f64) -> bool {
        match self {
            Geometry::Circle { .. } => self.signed_distance(p) >= -tol,
            Geometry::Polyline(pl) => {
                let b = pl.bbox;
                if p[0] < b.xmin
                    || p[0] > b.xmax
                    || p[1] < b.ymin
                    || p[1] > b.ymax
                    || !pl.contains(p)
                {
                    return true;
                }
                pl.distance(p).0 <= tol
            }
        }
    }

    pub fn closest_point(&self, p: Point) -> Projection {
        match self {
            Geometry::Circle { center, radius } => {
                let r = sub(p, *center);
                let len = norm(r);
                let (e, ambiguous) = if len <= TIE_TOL {
                    ([1.0, 0.0], true)
                } else {
                    ([r[0] / len, r[1] / len], false)
                };
                let x = [center[0] + radius * e[0], center[1] + radius * e[1]];
                Projection::new(p, x, [-e[0], -e[1]], ambiguous)
            }
            Geometry::Polyline(pl) => pl.closest_point(p),
        }
    }

    pub fn bbox(&self) -> Rect {
        match self {
            Geometry::Circle { center, radius } => Rect::new(
                center[0] - radius,
                center[0] + radius,
                center[1] - radius,
                center[1] + radius,
            ),
            Geometry::Polyline(pl) => pl.bbox,
        }
    }

    /// Area enclosed by the obstacle.
    pub fn area(&self) -> f64 {
        match self {
            Geometry::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            Geometry::Polyline(pl) => pl.area,
        }
    }
}

/// Closed counter-clockwise polyline.
#[derive(Debug, Clone)]
pub struct ClosedPolyline {
    points: Vec<Point>,
    /// Per-segment unit normals pointing into the enclosed region.
    seg_normals: Vec<Point>,
    vertex_normals: Vec<Point>,
    bbox: Rect,
    area: f64,
}

impl ClosedPolyline {
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid(
                "a closed polyline needs at least 3 vertices",
            ));
        }
        let n = points.len();
        let signed_area: f64 = 0.5
            * (0..n)
                .map(|i| cross(points[i], points[(i + 1) % n]))
                .sum::<f64>();
        if signed_area.abs() < 1e-300 {
            return Err(Error::invalid("polyline encloses no area"));
        }
        if signed_area < 0.0 {
            points.reverse();
        }
        let mut seg_normals = Vec::with_capacity(n);
        for i in 0..n {
            let t = sub(points[(i + 1) % n], points[i]);
            let l = norm(t);
            if l == 0.0 {
                return Err(Error::invalid(format!(
                    "polyline segment {i} has zero length"
                )));
            }
            // left of a CCW edge is the interior
            seg_normals.push([-t[1] / l, t[0] / l]);
        }
        let vertex_normals = (0..n)
            .map(|i| {
                let a = seg_normals[(i + n - 1) % n];
                let b = seg_normals[i];
                let s = [a[0] + b[0], a[1] + b[1]];
                let l = norm(s);
                if l > 0.0 {
                    [s[0] / l, s[1] / l]
                } else {
                    b
                }
            })
            .collect();
        let bbox = points.iter().fold(
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
        Ok(Self {
            points,
            seg_normals,
            vertex_normals,
            bbox,
            area: signed_area.abs(),
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn segment(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    /// Crossing-number point-in-polygon test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for i in 0..self.points.len() {
            let (a, b) = self.segment(i);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Unsigned distance and (segment, parameter) of the nearest point.
    fn distance(&self, p: Point) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for i in 0..self.points.len() {
            let (a, b) = self.segment(i);
            let (t, q) = project_segment(p, a, b);
            let d = norm(sub(q, p));
            if d < best.0 {
                best = (d, i, t);
            }
        }
        best
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.distance(p).0;
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    pub fn closest_point(&self, p: Point) -> Projection {
        let (dist, seg, t) = self.distance(p);
        let (a, b) = self.segment(seg);
        let x = lerp(a, b, t);
        // Another, distinct point at the same distance makes the projection ambiguous.
        let ambiguous = (0..self.points.len()).any(|i| {
            let (a, b) = self.segment(i);
            let (_, q) = project_segment(p, a, b);
            (norm(sub(q, p)) - dist).abs() <= TIE_TOL && norm(sub(q, x)) > 1e-9
        });
        let n = self.points.len();
        let normal = if t > 0.0 && t < 1.0 {
            self.seg_normals[seg]
        } else {
            let d = sub(x, p);
            let l = norm(d);
            if l > TIE_TOL {
                let s = if self.contains(p) { -1.0 } else { 1.0 };
                [s * d[0] / l, s * d[1] / l]
            } else {
                self.vertex_normals[if t >= 1.0 { (seg + 1) % n } else { seg }]
            }
        };
        Projection::new(p, x, normal, ambiguous)
    }
}

fn project_segment(p: Point, a: Point, b: Point) -> (f64, Point) {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    (t, lerp(a, b, t))
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}
