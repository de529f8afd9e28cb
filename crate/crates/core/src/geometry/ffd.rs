//! Bernstein tensor-product free-form deformation in 2D.

use crate::mesh::{Point, Rect};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn bernstein(n: usize, k: usize, t: f64) -> f64 {
    binomial(n, k) * t.powi(k as i32) * (1.0 - t).powi((n - k) as i32)
}

/// Control lattice of `(nx + 1) x (ny + 1)` points over a box. With zero
/// displacements the map is the identity (linear precision of Bernstein
/// polynomials).
#[derive(Debug, Clone)]
pub struct FfdLattice {
    bbox: Rect,
    degree: [usize; 2],
    /// Displacement of control point `(i, j)` at index `j * (nx + 1) + i`.
    displacements: Vec<Point>,
}

impl FfdLattice {
    pub fn new(bbox: Rect, degree_x: usize, degree_y: usize) -> Self {
        Self {
            bbox,
            degree: [degree_x, degree_y],
            displacements: vec![[0.0, 0.0]; (degree_x + 1) * (degree_y + 1)],
        }
    }

    pub fn displace(&mut self, i: usize, j: usize, by: Point) {
        let idx = j * (self.degree[0] + 1) + i;
        self.displacements[idx][0] += by[0];
        self.displacements[idx][1] += by[1];
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    /// Points outside the lattice box are left untouched.
    pub fn apply(&self, p: Point) -> Point {
        let b = &self.bbox;
        let s = (p[0] - b.xmin) / b.width();
        let t = (p[1] - b.ymin) / b.height();
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return p;
        }
        let [nx, ny] = self.degree;
        let mut out = p;
        for j in 0..=ny {
            let bj = bernstein(ny, j, t);
            for i in 0..=nx {
                let w = bernstein(nx, i, s) * bj;
                let d = self.displacements[j * (nx + 1) + i];
                out[0] += w * d[0];
                out[1] += w * d[1];
            }
        }
        out
    }
}
