//! Sierpiński carpet `𝕊 ⊂ [0,1]²`.

use super::Point2;

/// Digit → subcell offset; the central subcell (1,1) is the hole.
pub const SUBCELLS: [(u8, u8); 8] =
    [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)];

pub const DEFAULT_DESCENT_CAP: u32 = 60;

/// Exact Euclidean distance from `p` to the carpet.
pub fn carpet_distance(p: Point2) -> f64 {
    carpet_distance_capped(p, DEFAULT_DESCENT_CAP)
}

/// Distance with an explicit cap on the number of ternary levels examined.
///
/// Outside `[0,1]²` the answer is the distance to the unit square, whose
/// boundary lies in the carpet. Inside, ternary digits are consumed until
/// both coordinates hit digit 1 at the same level: the point then sits in an
/// open hole `H`, and `dist(p, 𝕊) = dist(p, ∂H)` because `H` is convex with
/// `∂H ⊂ 𝕊`. A point on a hole edge resolves to 0.
pub fn carpet_distance_capped(p: Point2, cap: u32) -> f64 {
    let dx = (-p.x).max(0.0).max(p.x - 1.0);
    let dy = (-p.y).max(0.0).max(p.y - 1.0);
    if dx > 0.0 || dy > 0.0 {
        return dx.hypot(dy);
    }
    let (mut u, mut v) = (p.x, p.y);
    let mut scale = 1.0;
    for _ in 0..cap {
        let (a, b) = (3.0 * u, 3.0 * v);
        let tx = (a.floor() as i64).clamp(0, 2);
        let ty = (b.floor() as i64).clamp(0, 2);
        if tx == 1 && ty == 1 {
            let m = (a - 1.0).min(2.0 - a).min(b - 1.0).min(2.0 - b).max(0.0);
            return m * scale / 3.0;
        }
        u = a - tx as f64;
        v = b - ty as f64;
        scale /= 3.0;
    }
    0.0
}

/// Whether the descent ever finds a hole (i.e. `p ∉ 𝕊` up to the cap).
pub fn in_some_hole(p: Point2, cap: u32) -> bool {
    if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
        return true;
    }
    carpet_distance_capped(p, cap) > 0.0
}
