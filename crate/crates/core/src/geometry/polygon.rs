//! Convex polygon helpers: half-plane clipping, areas, and exact moments of
//! `dist(·, line)^a` over a polygon.

use super::{Point2, Rect};

pub type Polygon = Vec<Point2>;

/// Shoelace area (positive for counter-clockwise order).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

pub fn area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

/// Area centroid; the vertex mean for degenerate polygons.
pub fn centroid(poly: &[Point2]) -> Point2 {
    let n = poly.len();
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a2.abs() <= f64::MIN_POSITIVE {
        let s = poly.iter().fold(Point2::new(0.0, 0.0), |acc, p| acc + *p);
        return s * (1.0 / n.max(1) as f64);
    }
    Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
}

pub fn bbox(poly: &[Point2]) -> Rect {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    Rect { min, max }
}

pub fn rect_polygon(r: &Rect) -> Polygon {
    r.corners().to_vec()
}

/// Keeps the part of `poly` where `normal·(x − origin) ≥ 0`.
pub fn clip_half_plane(poly: &[Point2], origin: Point2, normal: Point2) -> Polygon {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    let side = |p: Point2| normal.dot(p - origin);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let sa = side(a);
        let sb = side(b);
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    dedup(out)
}

/// Intersection of two convex polygons (the second given counter-clockwise).
pub fn clip_convex(poly: &[Point2], clip: &[Point2]) -> Polygon {
    let mut out = poly.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.len() < 3 {
            out.clear();
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let d = b - a;
        // Inward normal of a counter-clockwise edge.
        out = clip_half_plane(&out, a, Point2::new(-d.y, d.x));
    }
    out
}

pub fn clip_rect(poly: &[Point2], r: &Rect) -> Polygon {
    clip_convex(poly, &rect_polygon(r))
}

fn dedup(mut v: Polygon) -> Polygon {
    v.dedup_by(|a, b| (a.x - b.x).abs() < 1e-300 && (a.y - b.y).abs() < 1e-300);
    if v.len() > 1 && v[0] == v[v.len() - 1] {
        v.pop();
    }
    v
}

/// Point-in-convex-polygon test (boundary counts as inside).
pub fn contains_convex(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let orient = signed_area(poly).signum();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        orient * (b - a).cross(p - a) >= -1e-15
    })
}

/// Distance from `p` to a convex polygon (0 inside).
pub fn distance_to_convex(poly: &[Point2], p: Point2) -> f64 {
    if contains_convex(poly, p) {
        return 0.0;
    }
    let n = poly.len();
    (0..n)
        .map(|i| super::point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Length of the chord cut from a convex polygon by `normal·(x − origin) = t`.
fn chord(poly: &[Point2], origin: Point2, normal: Point2, t: f64) -> f64 {
    let tangent = Point2::new(-normal.y, normal.x);
    let n = poly.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let ta = normal.dot(a - origin) - t;
        let tb = normal.dot(b - origin) - t;
        if (ta <= 0.0 && tb >= 0.0) || (ta >= 0.0 && tb <= 0.0) {
            let p = if ta == tb { a } else { a + (b - a) * (ta / (ta - tb)) };
            let s = tangent.dot(p - origin);
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// `∫_{t1}^{t2} t^e dt` for `0 ≤ t1 ≤ t2`, `+∞` when it diverges at 0.
pub fn power_integral(t1: f64, t2: f64, e: f64) -> f64 {
    if t2 <= t1 {
        return 0.0;
    }
    let e1 = e + 1.0;
    if t1 == 0.0 {
        if e1 <= 0.0 {
            return f64::INFINITY;
        }
        return t2.powf(e1) / e1;
    }
    let rel = (t2 - t1) / t1;
    if e1 == 0.0 {
        rel.ln_1p()
    } else {
        // Stable form of (t2^{e1} − t1^{e1}) / e1.
        t1.powf(e1) * (e1 * rel.ln_1p()).exp_m1() / e1
    }
}

/// Exact `∫_P (normal·(x − origin))^a dx` over a convex polygon lying on the
/// nonnegative side of the line. The chord length of `P` is piecewise linear
/// in the offset, so the integral splits into closed-form power moments.
pub fn line_moment(poly: &[Point2], origin: Point2, normal: Point2, a: f64) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut ts: Vec<f64> = poly.iter().map(|p| normal.dot(*p - origin).max(0.0)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let t_max = *ts.last().unwrap();
    let scale = t_max.max(1e-300);
    let mut total = 0.0;
    let mut widest: f64 = 0.0;
    let mut segments = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let (t1, t2) = (w[0], w[1]);
        if t2 - t1 <= 1e-15 * scale {
            continue;
        }
        let h = t2 - t1;
        let (ta, tb) = (t1 + h / 3.0, t1 + 2.0 * h / 3.0);
        let (wa, wb) = (chord(poly, origin, normal, ta), chord(poly, origin, normal, tb));
        let slope = (wb - wa) / (tb - ta);
        let w1 = wa - slope * (ta - t1);
        widest = widest.max(wa).max(wb);
        segments.push((t1, t2, w1, slope));
    }
    for (t1, t2, mut w1, slope) in segments {
        if w1.abs() <= 1e-12 * widest {
            w1 = 0.0;
        }
        let c0 = w1 - slope * t1;
        let mut part = 0.0;
        if c0 != 0.0 {
            part += c0 * power_integral(t1, t2, a);
        }
        if slope != 0.0 {
            part += slope * power_integral(t1, t2, a + 1.0);
        }
        if part.is_nan() {
            // ∞ − ∞ cannot occur for a nonnegative integrand; guard anyway.
            return f64::INFINITY;
        }
        total += part;
    }
    total.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Polygon {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn clipping_keeps_area() {
        let half = clip_half_plane(&unit(), Point2::new(0.5, 0.0), Point2::new(1.0, 0.0));
        assert!((area(&half) - 0.5).abs() < 1e-15);
        let diag = clip_half_plane(&unit(), Point2::new(0.0, 0.0), Point2::new(1.0, -1.0));
        assert!((area(&diag) - 0.5).abs() < 1e-15);
        let empty = clip_half_plane(&unit(), Point2::new(2.0, 0.0), Point2::new(1.0, 0.0));
        assert!(area(&empty) == 0.0);
    }

    #[test]
    fn moment_of_square_against_edge() {
        // ∫_0^1 ∫_0^1 y^a dy dx = 1/(a+1)
        for a in [-0.5, 0.0, 1.0, 2.5] {
            let m = line_moment(&unit(), Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), a);
            assert!((m - 1.0 / (a + 1.0)).abs() < 1e-13, "a={a} m={m}");
        }
        assert!(line_moment(&unit(), Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), -1.0).is_infinite());
    }

    #[test]
    fn moment_of_triangle_touching_at_vertex() {
        // Triangle (0,0),(1,1),(-1,1): width 2y, ∫_0^1 y^a·2y dy = 2/(a+2); finite at a=-1.
        let tri = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(-1.0, 1.0)];
        for a in [-1.5, -1.0, 0.0, 0.5] {
            let m = line_moment(&tri, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), a);
            assert!((m - 2.0 / (a + 2.0)).abs() < 1e-12, "a={a} m={m}");
        }
    }

    #[test]
    fn moment_against_quadrature() {
        // Pentagon away from the line; compare with a fine midpoint rule on y.
        let poly = vec![
            Point2::new(0.2, 0.3),
            Point2::new(0.9, 0.4),
            Point2::new(1.0, 0.9),
            Point2::new(0.5, 1.3),
            Point2::new(0.1, 0.8),
        ];
        let a = -0.7;
        let exact = line_moment(&poly, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), a);
        let n = 200_000;
        let (y0, y1) = (0.3, 1.3);
        let h = (y1 - y0) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let y = y0 + (i as f64 + 0.5) * h;
            acc += y.powf(a) * chord(&poly, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), y) * h;
        }
        assert!((exact - acc).abs() < 1e-8, "{exact} vs {acc}");
    }

    #[test]
    fn power_integral_matches_closed_form() {
        assert!((power_integral(1.0, 2.0, -1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((power_integral(0.5, 2.0, 2.0) - (8.0 - 0.125) / 3.0).abs() < 1e-14);
        assert!(power_integral(0.0, 1.0, -1.2).is_infinite());
    }
}
