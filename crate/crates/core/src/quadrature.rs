//! Quadrature on triangles in barycentric form. Weights sum to one and are
//! multiplied by the cell area by the caller.

/// `(barycentric coordinates, weight)`
pub type QuadPoint = ([f64; 3], f64);

/// One point at the centroid; exact for degree 1.
pub const CENTROID: [QuadPoint; 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

/// Edge midpoints; exact for degree 2.
pub const EDGE_MIDPOINTS: [QuadPoint; 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

// Dunavant points (9 ∓ 2√15)/21, (6 ± √15)/21 and weights (155 ± √15)/1200.
const A1: f64 = 0.05971587178976981;
const B1: f64 = 0.47014206410511505;
const A2: f64 = 0.7974269853530872;
const B2: f64 = 0.10128650732345633;
const W1: f64 = 0.13239415278850616;
const W2: f64 = 0.12593918054482717;

/// Seven-point rule, exact for degree 5.
pub const DEGREE5: [QuadPoint; 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

/// Maps barycentric coordinates to a physical point.
pub fn to_physical(p: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    [
        bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
        bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
    ]
}

/// `∫_T f` with the given rule.
pub fn integrate(p: &[[f64; 2]; 3], area: f64, rule: &[QuadPoint], f: impl Fn([f64; 2]) -> f64) -> f64 {
    area * rule.iter().map(|(b, w)| w * f(to_physical(p, b))).sum::<f64>()
}
