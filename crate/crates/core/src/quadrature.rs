//! Quadrature rules on the unit interval and the reference triangle.

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let raw: &[(f64, f64)] = match n {
        1 => &[(0.0, 2.0)],
        2 => &[
            (-0.577_350_269_189_625_8, 1.0),
            (0.577_350_269_189_625_8, 1.0),
        ],
        3 => &[
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ],
        _ => panic!("gauss_legendre_unit supports 1..=3 points, got {n}"),
    };
    raw.iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Triangle rule as barycentric coordinates and weights summing to 1.
pub struct TriangleRule {
    pub points: &'static [([f64; 3], f64)],
}

/// Three interior points, exact for degree 2.
pub const TRI_DEGREE2: TriangleRule = TriangleRule {
    points: &[
        ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
    ],
};

const A4: f64 = 0.445_948_490_915_965;
const B4: f64 = 0.091_576_213_509_771;
const WA4: f64 = 0.223_381_589_678_011;
const WB4: f64 = 0.109_951_743_655_322;

/// Six-point Dunavant rule, exact for degree 4.
pub const TRI_DEGREE4: TriangleRule = TriangleRule {
    points: &[
        ([A4, A4, 1.0 - 2.0 * A4], WA4),
        ([A4, 1.0 - 2.0 * A4, A4], WA4),
        ([1.0 - 2.0 * A4, A4, A4], WA4),
        ([B4, B4, 1.0 - 2.0 * B4], WB4),
        ([B4, 1.0 - 2.0 * B4, B4], WB4),
        ([1.0 - 2.0 * B4, B4, B4], WB4),
    ],
};
