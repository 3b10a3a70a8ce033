//! The von Koch snowflake: polygonal approximants `K_n`, interval distances to
//! the limit curve `K` and membership in the bounded domain `Ω`.

use super::{point_segment_distance, IntervalValue, Point2, Status, SQRT3};
use crate::{Error, Result};

/// Largest approximant level we are willing to materialize (3·4^10 vertices).
pub const MAX_LEVEL: u32 = 10;

/// Height of a Koch bump relative to the length of its base segment.
pub const BUMP_HEIGHT: f64 = SQRT3 / 6.0;

const K0: [Point2; 3] =
    [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, SQRT3 / 2.0)];

/// Outward unit normal of a counter-clockwise segment direction.
pub fn outward_normal(d: Point2) -> Point2 {
    let n = d.norm();
    Point2::new(d.y / n, -d.x / n)
}

/// Closed polyline `K_n`: `3·4ⁿ` vertices, each consecutive pair (cyclically)
/// a segment of length `3^{-n}`. Traversed counter-clockwise with the bumps
/// pointing outward.
pub fn koch_polygon(n: u32) -> Result<Vec<Point2>> {
    if n > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "Koch level {n} needs {} vertices; the limit is level {MAX_LEVEL}",
            3u64 * 4u64.pow(n)
        )));
    }
    let mut pts = K0.to_vec();
    for _ in 0..n {
        let m = pts.len();
        let mut next = Vec::with_capacity(4 * m);
        for i in 0..m {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let third = (b - a) * (1.0 / 3.0);
            let p1 = a + third;
            let apex = p1 + third.rotate(-std::f64::consts::FRAC_PI_3);
            next.extend_from_slice(&[a, p1, apex, a + third * 2.0]);
        }
        pts = next;
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Unknown,
}

/// `K_n` with the implicit segment hierarchy used as a spatial index: the
/// level-`m` segment `j` spans vertices `j·4^{n−m} ..= (j+1)·4^{n−m}`, and
/// everything it generates stays inside the ball on its chord as diameter.
#[derive(Debug, Clone)]
pub struct KochCurve {
    level: u32,
    vertices: Vec<Point2>,
}

impl KochCurve {
    pub fn new(level: u32) -> Result<Self> {
        Ok(KochCurve { level, vertices: koch_polygon(level)? })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Conservative Hausdorff distance between `K_n` and `K`.
    pub fn hausdorff_bound(&self) -> f64 {
        3f64.powi(-(self.level as i32))
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len()
    }

    fn node(&self, m: u32, j: usize) -> (Point2, Point2) {
        let stride = 4usize.pow(self.level - m);
        let n = self.vertices.len();
        (self.vertices[(j * stride) % n], self.vertices[((j + 1) * stride) % n])
    }

    /// `dist(p, K_n)`.
    pub fn distance(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..3 {
            self.nearest(0, j, p, &mut best);
        }
        best
    }

    fn nearest(&self, m: u32, j: usize, p: Point2, best: &mut f64) {
        let (a, b) = self.node(m, j);
        if m == self.level {
            *best = best.min(point_segment_distance(p, a, b));
            return;
        }
        let mut kids = [(0.0, 0usize); 4];
        for (c, kid) in kids.iter_mut().enumerate() {
            let (ca, cb) = self.node(m + 1, 4 * j + c);
            let lb = p.dist((ca + cb) * 0.5) - 0.5 * ca.dist(cb);
            *kid = (lb, 4 * j + c);
        }
        kids.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (lb, k) in kids {
            if lb < *best {
                self.nearest(m + 1, k, p, best);
            }
        }
    }

    /// `[d_n − h_n, d_n + h_n]` with `h_n = 3^{-n}`, clamped at 0.
    pub fn distance_interval(&self, p: Point2) -> IntervalValue {
        let d = self.distance(p);
        let h = self.hausdorff_bound();
        IntervalValue::new((d - h).max(0.0), d + h, Status::Converged)
    }

    /// Segments of `K_n` within distance `radius` of `p`.
    pub fn segments_within(&self, p: Point2, radius: f64, limit: usize) -> Option<Vec<(Point2, Point2)>> {
        let mut out = Vec::new();
        for j in 0..3 {
            if !self.collect(0, j, p, radius, limit, &mut out) {
                return None;
            }
        }
        Some(out)
    }

    fn collect(
        &self,
        m: u32,
        j: usize,
        p: Point2,
        radius: f64,
        limit: usize,
        out: &mut Vec<(Point2, Point2)>,
    ) -> bool {
        let (a, b) = self.node(m, j);
        if m == self.level {
            if point_segment_distance(p, a, b) <= radius {
                if out.len() >= limit {
                    return false;
                }
                out.push((a, b));
            }
            return true;
        }
        if p.dist((a + b) * 0.5) - 0.5 * a.dist(b) > radius {
            return true;
        }
        (0..4).all(|c| self.collect(m + 1, 4 * j + c, p, radius, limit, out))
    }

    /// Total turning angle of `K_n` around `p` (±2π inside, 0 outside).
    fn winding_angle(&self, p: Point2) -> f64 {
        (0..3).map(|j| self.wind(0, j, p)).sum()
    }

    fn wind(&self, m: u32, j: usize, p: Point2) -> f64 {
        let (a, b) = self.node(m, j);
        let far = p.dist((a + b) * 0.5) > 0.5 * a.dist(b) * (1.0 + 1e-9);
        if far || m == self.level {
            let (u, v) = (a - p, b - p);
            return u.cross(v).atan2(u.dot(v));
        }
        (0..4).map(|c| self.wind(m + 1, 4 * j + c, p)).sum()
    }

    /// Point-in-polygon verdict for `K_n` alone (no ambiguity band).
    pub fn winding_inside(&self, p: Point2) -> bool {
        self.winding_angle(p).abs() > std::f64::consts::PI
    }

    /// Membership in `Ω`: `Unknown` inside the band `dist(p, K_n) ≤ 3^{-n}`.
    pub fn membership(&self, p: Point2) -> Membership {
        if self.distance(p) <= self.hausdorff_bound() {
            Membership::Unknown
        } else if self.winding_inside(p) {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }
}

pub fn koch_distance(curve: &KochCurve, p: Point2) -> IntervalValue {
    curve.distance_interval(p)
}

pub fn inside_snowflake(curve: &KochCurve, p: Point2) -> Membership {
    curve.membership(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_counts_and_lengths() {
        let k0 = koch_polygon(0).unwrap();
        assert_eq!(k0.len(), 3);
        let k2 = koch_polygon(2).unwrap();
        assert_eq!(k2.len(), 48);
        let n = k2.len();
        let mut perimeter = 0.0;
        for i in 0..n {
            let l = k2[i].dist(k2[(i + 1) % n]);
            assert!((l - 1.0 / 9.0).abs() < 1e-14);
            perimeter += l;
        }
        assert!((perimeter - 3.0 * (4.0f64 / 3.0).powi(2)).abs() < 1e-12);
        assert!(koch_polygon(MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn bumps_point_outward() {
        let k1 = koch_polygon(1).unwrap();
        // Apex of the bump on the base edge is below the base.
        assert!(k1[2].y < 0.0);
        assert!((k1[2].y + SQRT3 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn vertex_of_k0_has_zero_distance_at_every_level() {
        for n in 0..6 {
            let c = KochCurve::new(n).unwrap();
            assert_eq!(c.distance(Point2::new(0.0, 0.0)), 0.0);
            let iv = c.distance_interval(Point2::new(0.0, 0.0));
            assert!(iv.lo == 0.0 && iv.hi <= 2.0 * c.hausdorff_bound());
        }
    }

    #[test]
    fn tree_distance_matches_brute_force() {
        let c = KochCurve::new(4).unwrap();
        let v = c.vertices();
        let pts = [
            Point2::new(10.0, 0.0),
            Point2::new(0.5, 0.3),
            Point2::new(-0.2, 0.9),
            Point2::new(0.31, -0.05),
        ];
        for p in pts {
            let brute = (0..v.len())
                .map(|i| point_segment_distance(p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::INFINITY, f64::min);
            assert!((c.distance(p) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn membership_examples() {
        let c = KochCurve::new(4).unwrap();
        assert_eq!(c.membership(Point2::new(0.5, SQRT3 / 6.0)), Membership::Inside);
        assert_eq!(c.membership(Point2::new(10.0, 10.0)), Membership::Outside);
        let near = Point2::new(0.3 * c.hausdorff_bound(), 0.3 * c.hausdorff_bound());
        assert!(c.distance(near) < c.hausdorff_bound());
        assert_eq!(c.membership(near), Membership::Unknown);
    }
}
