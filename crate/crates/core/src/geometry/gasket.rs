//! Sierpiński gasket `𝔾` with boundary triangle `(0,0), (1,0), (1/2, √3/2)`.

use super::{point_segment_distance, Point2, SQRT3};

pub const VERTICES: [Point2; 3] =
    [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, SQRT3 / 2.0)];

const DESCENT_CAP: u32 = 60;

/// Barycentric coordinates of `p` with respect to the unit boundary triangle.
fn barycentric(p: Point2) -> [f64; 3] {
    let l2 = 2.0 * p.y / SQRT3;
    let l1 = p.x - 0.5 * l2;
    [1.0 - l1 - l2, l1, l2]
}

/// Exact Euclidean distance from `p` to the gasket.
///
/// In barycentric coordinates `λ` of the current triangle, the corner
/// subtriangle at vertex `i` is `λ_i ≥ 1/2` and the central (downward) hole is
/// where all `λ_i < 1/2`. Inside the hole the distance to its boundary is
/// `min_i (1/2 − λ_i)·h` with `h` the current triangle height.
pub fn gasket_distance(p: Point2) -> f64 {
    let mut lam = barycentric(p);
    if lam.iter().any(|&l| l < 0.0) {
        let n = VERTICES.len();
        return (0..n)
            .map(|i| point_segment_distance(p, VERTICES[i], VERTICES[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min);
    }
    let mut height = SQRT3 / 2.0;
    for _ in 0..DESCENT_CAP {
        match (0..3).find(|&i| lam[i] >= 0.5) {
            Some(i) => {
                for (j, l) in lam.iter_mut().enumerate() {
                    *l = if j == i { 2.0 * *l - 1.0 } else { 2.0 * *l };
                }
                height *= 0.5;
            }
            None => {
                let m = lam.iter().map(|l| 0.5 - l).fold(f64::INFINITY, f64::min);
                return m.max(0.0) * height;
            }
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        assert_eq!(gasket_distance(Point2::new(0.0, 0.0)), 0.0);
        let c = gasket_distance(Point2::new(0.5, SQRT3 / 6.0));
        assert!((c - 1.0 / (4.0 * SQRT3)).abs() < 1e-15, "{c}");
        assert!((gasket_distance(Point2::new(0.5, -1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_midpoints_are_in_gasket() {
        assert!(gasket_distance(Point2::new(0.5, 0.0)) < 1e-15);
        assert!(gasket_distance(Point2::new(0.25, SQRT3 / 4.0)) < 1e-15);
    }
}
