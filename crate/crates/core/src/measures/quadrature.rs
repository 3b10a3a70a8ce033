//! Interval quadrature of `∫_R f(x) dist(x, E)^α dx`.
//!
//! The region is cut into pieces whose weighted area is either known exactly
//! or bracketed:
//!
//! * whole carpet / gasket cells inside `R` use the self-similar closed form;
//!   cells cut by `∂R` are bracketed by `[0, closed form]` and refined;
//! * holes are split into nearest-edge triangles on which the weight is the
//!   distance to one line, integrated exactly by [`line_moment`];
//! * the exterior of the outer hull is split into edge slabs (distance to a
//!   line) and vertex wedges (distance to a point);
//! * snowflake pieces are plain squares bracketed through the distance to the
//!   polygon `K_n` and refined down to its resolution.
//!
//! The piece with the widest contribution interval is always refined next, so
//! the enclosure `[lo, hi]` shrinks as fast as the structure allows.

use std::collections::BinaryHeap;

use super::closed_form::{carpet_cell_measure, gasket_cell_measure};
use crate::geometry::polygon::{
    area, bbox, centroid, clip_half_plane, clip_rect, distance_to_convex,
    line_moment, rect_polygon, Polygon,
};
use crate::geometry::{Ball, Cell, Fractal, FractalKind, IntervalValue, Point2, Rect, Region, Status};

/// A bounded integrand sampled by rectangles.
pub trait Integrand: Sync {
    /// Lower and upper bound of the integrand over `r`.
    fn bounds(&self, r: &Rect) -> (f64, f64);

    /// `Some(c)` when the integrand is the constant `c`.
    fn constant(&self) -> Option<f64> {
        None
    }
}

/// The integrand `1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unit;

impl Integrand for Unit {
    fn bounds(&self, _: &Rect) -> (f64, f64) {
        (1.0, 1.0)
    }

    fn constant(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Relative width `(hi − lo)/lo` at which the estimate counts as converged.
    pub tol: f64,
    /// Maximum number of pieces evaluated.
    pub budget: usize,
    /// Lower bounds beyond this multiple of a crude reference value are
    /// reported as divergent.
    pub divergence_factor: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-4, budget: 10_000_000, divergence_factor: 1e6 }
    }
}

impl QuadratureOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: IntervalValue,
    pub pieces: usize,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Cell { cell: Cell, full: bool },
    Line { origin: Point2, normal: Point2 },
    Point { center: Point2 },
    Koch,
}

#[derive(Debug, Clone)]
struct Piece {
    poly: Polygon,
    bbox: Rect,
    kind: Kind,
    lo: f64,
    hi: f64,
    seq: u64,
}

impl Piece {
    fn width(&self) -> f64 {
        if self.hi == f64::INFINITY {
            f64::INFINITY
        } else {
            self.hi - self.lo
        }
    }
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.seq == o.seq
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        // Widest first; older pieces win ties.
        self.width().total_cmp(&o.width()).then(o.seq.cmp(&self.seq))
    }
}

/// `x·y` with `0·∞ = 0`.
fn mul0(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        0.0
    } else {
        x * y
    }
}

/// Product of an integrand interval with a nonnegative measure interval.
fn mul_interval((flo, fhi): (f64, f64), (mlo, mhi): (f64, f64)) -> (f64, f64) {
    let lo = if flo >= 0.0 { mul0(flo, mlo) } else { mul0(flo, mhi) };
    let hi = if fhi >= 0.0 { mul0(fhi, mhi) } else { mul0(fhi, mlo) };
    (lo, hi)
}

/// `[min, max]` of `t^a` for `t ∈ [t0, t1]`, `t0 ≥ 0`.
fn pow_range(t0: f64, t1: f64, a: f64) -> (f64, f64) {
    if a >= 0.0 {
        (t0.powf(a), t1.powf(a))
    } else {
        (t1.powf(a), if t0 > 0.0 { t0.powf(a) } else { f64::INFINITY })
    }
}

struct Engine<'a> {
    fractal: &'a Fractal,
    clip_poly: Polygon,
    /// `(origin, inward normal)` of every edge of `clip_poly`.
    clip_edges: Vec<(Point2, Point2)>,
    clip_box: Rect,
    /// `(center, inradius, circumradius)` of `clip_poly`.
    clip_disc: (Point2, f64, f64),
    indicator: Option<Ball>,
    alpha: f64,
    integrand: &'a dyn Integrand,
    koch_min: f64,
    min_size: f64,
    seq: u64,
    evaluated: usize,
}

impl<'a> Engine<'a> {
    fn clip(&self, poly: &[Point2]) -> Polygon {
        let (c, r_in, r_out) = self.clip_disc;
        let b = bbox(poly);
        if b.max_distance_to(c) <= r_in {
            return poly.to_vec();
        }
        if b.distance_to(c) >= r_out {
            return Vec::new();
        }
        let mut out = poly.to_vec();
        for &(o, n) in &self.clip_edges {
            if out.iter().any(|p| n.dot(*p - o) < 0.0) {
                out = clip_half_plane(&out, o, n);
                if out.len() < 3 {
                    return Vec::new();
                }
            }
        }
        out
    }

    fn inside(&self, p: Point2) -> bool {
        if p.dist(self.clip_disc.0) <= self.clip_disc.1 {
            return true;
        }
        self.clip_edges.iter().all(|&(o, n)| n.dot(p - o) >= -1e-15 * n.norm())
    }

    fn cell_value(&self, cell: &Cell) -> f64 {
        match *cell {
            Cell::Square { side, .. } => carpet_cell_measure(side, self.alpha).value(),
            Cell::Triangle { side, .. } => gasket_cell_measure(side, self.alpha).value(),
            Cell::Segment { .. } => unreachable!("snowflake pieces are squares"),
        }
    }

    /// Bounds on the weighted area (integrand excluded).
    fn measure_bounds(&self, poly: &[Point2], b: &Rect, kind: &Kind) -> (f64, f64) {
        let a = self.alpha;
        match *kind {
            Kind::Cell { cell, full } => {
                let v = self.cell_value(&cell);
                if full {
                    rounded(v)
                } else {
                    (0.0, v)
                }
            }
            Kind::Line { origin, normal } => {
                rounded(line_moment(poly, origin, normal, a))
            }
            Kind::Point { center } => {
                let ar = area(poly);
                let r_min = distance_to_convex(poly, center);
                let r_max = poly.iter().map(|p| p.dist(center)).fold(0.0, f64::max);
                let (wlo, whi) = pow_range(r_min, r_max, a);
                let mut hi = mul0(ar, whi);
                if r_min <= 0.0 && a < 0.0 {
                    // Polar bound over the disc of radius r_max.
                    hi = if a > -2.0 {
                        2.0 * std::f64::consts::PI * r_max.powf(a + 2.0) / (a + 2.0)
                    } else {
                        f64::INFINITY
                    };
                }
                (mul0(ar, wlo), hi)
            }
            Kind::Koch => self.koch_bounds(poly, b),
        }
    }

    fn koch_bounds(&self, poly: &[Point2], b: &Rect) -> (f64, f64) {
        let curve = self.fractal.koch_curve().expect("snowflake without curve");
        let a = self.alpha;
        let ar = area(poly);
        let c = b.center();
        let hd = b.half_diagonal();
        let dc = curve.distance(c);
        if dc > hd {
            if !curve.winding_inside(c) {
                return (0.0, 0.0);
            }
            let (wlo, whi) = pow_range(dc - hd, dc + hd, a);
            return (ar * wlo, ar * whi);
        }
        if a >= 0.0 {
            return (0.0, ar * (dc + hd).powf(a));
        }
        // Every point's nearest segment lies within dc + 2·hd of the center,
        // and the distance to a segment dominates the distance to its line.
        match curve.segments_within(c, dc + 2.0 * hd, 64) {
            Some(segs) => {
                let mut hi = 0.0;
                for (p, q) in segs {
                    let d = q - p;
                    let n = Point2::new(-d.y, d.x) * (1.0 / d.norm());
                    let plus = clip_half_plane(poly, p, n);
                    let minus = clip_half_plane(poly, p, -n);
                    hi += line_moment(&plus, p, n, a) + line_moment(&minus, p, -n, a);
                }
                (0.0, hi)
            }
            None => (0.0, f64::INFINITY),
        }
    }

    fn integrand_bounds(&self, b: &Rect) -> (f64, f64) {
        let f = self.integrand.bounds(b);
        match self.indicator {
            None => f,
            Some(ball) => {
                if b.max_distance_to(ball.center) <= ball.radius {
                    f
                } else if b.distance_to(ball.center) >= ball.radius {
                    (0.0, 0.0)
                } else {
                    (f.0.min(0.0), f.1.max(0.0))
                }
            }
        }
    }

    fn make(&mut self, poly: Polygon, kind: Kind) -> Option<Piece> {
        if poly.len() < 3 {
            return None;
        }
        let footprint = match kind {
            Kind::Cell { cell, .. } => area(&cell.footprint()),
            _ => self.clip_box.width() * self.clip_box.height(),
        };
        let ar = area(&poly);
        if ar <= 1e-13 * footprint || ar < 1e-30 {
            return None;
        }
        let b = bbox(&poly);
        self.evaluated += 1;
        let f = self.integrand_bounds(&b);
        let (lo, hi) = if f == (0.0, 0.0) {
            (0.0, 0.0)
        } else {
            mul_interval(f, self.measure_bounds(&poly, &b, &kind))
        };
        self.seq += 1;
        Some(Piece { poly, bbox: b, kind, lo, hi, seq: self.seq })
    }

    fn roots(&mut self) -> Vec<Piece> {
        let rp = self.clip_poly.clone();
        let mut out = Vec::new();
        if self.fractal.kind() == FractalKind::Koch {
            out.extend(self.make(rp, Kind::Koch));
            return out;
        }
        let root = Cell::roots(self.fractal.kind())[0];
        out.extend(self.cell_piece(root));
        let hull = root.footprint();
        let n = hull.len();
        for i in 0..n {
            let (prev, v, next) = (hull[(i + n - 1) % n], hull[i], hull[(i + 1) % n]);
            let t = next - v;
            let t = t * (1.0 / t.norm());
            let out_n = Point2::new(t.y, -t.x);
            let mut slab = clip_half_plane(&rp, v, out_n);
            slab = clip_half_plane(&slab, v, t);
            slab = clip_half_plane(&slab, next, -t);
            out.extend(self.make(slab, Kind::Line { origin: v, normal: out_n }));
            let tp = v - prev;
            let tp = tp * (1.0 / tp.norm());
            let mut wedge = clip_half_plane(&rp, v, tp);
            wedge = clip_half_plane(&wedge, v, -t);
            out.extend(self.make(wedge, Kind::Point { center: v }));
        }
        out
    }

    fn cell_piece(&mut self, cell: Cell) -> Option<Piece> {
        let fp = cell.footprint();
        let poly = self.clip(&fp);
        let full = fp.iter().all(|p| self.inside(*p));
        self.make(poly, Kind::Cell { cell, full })
    }

    /// Hole of `cell`, as nearest-edge triangles `(polygon, origin, inward normal)`.
    fn hole_triangles(cell: &Cell) -> Vec<(Polygon, Point2, Point2)> {
        let hole: Vec<Point2> = match *cell {
            Cell::Square { origin: o, side: s } => {
                let (a, b) = (s / 3.0, 2.0 * s / 3.0);
                vec![
                    o + Point2::new(a, a),
                    o + Point2::new(b, a),
                    o + Point2::new(b, b),
                    o + Point2::new(a, b),
                ]
            }
            Cell::Triangle { origin: o, side: s } => {
                let h = 0.25 * crate::geometry::SQRT3 * s;
                vec![
                    o + Point2::new(0.5 * s, 0.0),
                    o + Point2::new(0.75 * s, h),
                    o + Point2::new(0.25 * s, h),
                ]
            }
            Cell::Segment { .. } => return Vec::new(),
        };
        let n = hole.len();
        let c = hole.iter().fold(Point2::new(0.0, 0.0), |acc, p| acc + *p) * (1.0 / n as f64);
        (0..n)
            .map(|i| {
                let (p, q) = (hole[i], hole[(i + 1) % n]);
                let d = q - p;
                let inward = Point2::new(-d.y, d.x) * (1.0 / d.norm());
                (vec![p, q, c], p, inward)
            })
            .collect()
    }

    fn children(&mut self, piece: &Piece) -> Vec<Piece> {
        let mut out = Vec::new();
        match piece.kind {
            Kind::Cell { cell, .. } => {
                for d in 0..cell.branching() {
                    out.extend(self.cell_piece(cell.child(d)));
                }
                for (tri, origin, normal) in Self::hole_triangles(&cell) {
                    let poly = self.clip(&tri);
                    out.extend(self.make(poly, Kind::Line { origin, normal }));
                }
            }
            kind => {
                let b = piece.bbox;
                let c = b.center();
                let quads = [
                    Rect { min: b.min, max: c },
                    Rect { min: Point2::new(c.x, b.min.y), max: Point2::new(b.max.x, c.y) },
                    Rect { min: c, max: b.max },
                    Rect { min: Point2::new(b.min.x, c.y), max: Point2::new(c.x, b.max.y) },
                ];
                for q in quads {
                    let poly = clip_rect(&piece.poly, &q);
                    out.extend(self.make(poly, kind));
                }
            }
        }
        out
    }

    /// Lower bound on `dist(·, E)` over a piece.
    fn distance_lower(&self, piece: &Piece) -> f64 {
        match piece.kind {
            Kind::Cell { .. } => 0.0,
            Kind::Line { origin, normal } => piece
                .poly
                .iter()
                .map(|p| normal.dot(*p - origin) / normal.norm())
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            Kind::Point { center } => distance_to_convex(&piece.poly, center),
            Kind::Koch => {
                let c = piece.bbox.center();
                (self.fractal.distance(c) - piece.bbox.half_diagonal()).max(0.0)
            }
        }
    }

    fn refinable(&self, piece: &Piece) -> bool {
        let size = piece.bbox.width().max(piece.bbox.height());
        match piece.kind {
            Kind::Koch => size > self.koch_min,
            _ => size > self.min_size,
        }
    }
}

/// Running total of interval contributions that tolerates infinite bounds.
#[derive(Default)]
struct Totals {
    lo: f64,
    hi: f64,
    inf_lo: usize,
    inf_hi: usize,
}

impl Totals {
    fn add(&mut self, p: &Piece, sign: f64) {
        let step = if sign > 0.0 { 1isize } else { -1 };
        if p.lo.is_infinite() {
            self.inf_lo = (self.inf_lo as isize + step) as usize;
        } else {
            self.lo += sign * p.lo;
        }
        if p.hi.is_infinite() {
            self.inf_hi = (self.inf_hi as isize + step) as usize;
        } else {
            self.hi += sign * p.hi;
        }
    }
}

/// Interval enclosure of `∫_R f(x)·dist(x, E)^α dx` (restricted to `Ω` for
/// the snowflake, with `E` replaced by the polygon `K_n`).
///
/// Balls with a constant nonnegative integrand are sandwiched between an
/// inscribed and a circumscribed regular polygon; other integrands over balls
/// fold the indicator of the ball into the integrand bounds.
pub fn integrate(
    fractal: &Fractal,
    region: &Region,
    alpha: f64,
    integrand: &dyn Integrand,
    opts: &QuadratureOptions,
) -> QuadratureResult {
    if alpha == 0.0 && fractal.koch_curve().is_none() {
        // The weight is identically 1 off the Lebesgue-null set E.
        if let Some(c) = integrand.constant() {
            return QuadratureResult { value: IntervalValue::exact(c * region.area()), pieces: 1 };
        }
    }
    match *region {
        Region::Square(s) => {
            integrate_polygon(fractal, &rect_polygon(&s.rect()), None, alpha, integrand, opts)
        }
        Region::Ball(b) => match integrand.constant() {
            Some(c) if c >= 0.0 => ball_sandwich(fractal, &b, alpha, c, opts),
            _ => {
                let sq = rect_polygon(&b.bounding_square().rect());
                integrate_polygon(fractal, &sq, Some(b), alpha, integrand, opts)
            }
        },
    }
}

/// Counter-clockwise regular `n`-gon with circumradius `r`.
pub fn regular_polygon(center: Point2, r: f64, n: usize) -> Polygon {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            center + Point2::new(r * t.cos(), r * t.sin())
        })
        .collect()
}

/// Largest regular polygon used to sandwich a ball.
const MAX_SIDES: usize = 8192;

fn ball_sandwich(fractal: &Fractal, b: &Ball, alpha: f64, c: f64, opts: &QuadratureOptions) -> QuadratureResult {
    // Relative area gap between the two polygons is about π²/n².
    let mut n = ((std::f64::consts::PI * (4.0 / opts.tol).sqrt()).ceil() as usize).max(16);
    let inner_opts = QuadratureOptions { tol: 0.4 * opts.tol, budget: opts.budget / 2, ..*opts };
    let unit = ConstantIntegrand(c);
    let mut pieces = 0;
    for _ in 0..4 {
        if n > MAX_SIDES {
            // Clipping against that many edges costs more than the indicator path.
            break;
        }
        let inner = regular_polygon(b.center, b.radius, n);
        let outer = regular_polygon(b.center, b.radius / (std::f64::consts::PI / n as f64).cos(), n);
        let lo = integrate_polygon(fractal, &inner, None, alpha, &unit, &inner_opts);
        if lo.value.status == Status::Divergent {
            return QuadratureResult { value: lo.value, pieces: pieces + lo.pieces };
        }
        let hi = integrate_polygon(fractal, &outer, None, alpha, &unit, &inner_opts);
        pieces += lo.pieces + hi.pieces;
        let (l, h) = (lo.value.lo, hi.value.hi);
        if h - l <= opts.tol * l || (h <= 0.0 && l >= 0.0) {
            return QuadratureResult { value: IntervalValue::new(l, h, Status::Converged), pieces };
        }
        let both = lo.value.status == Status::Converged && hi.value.status == Status::Converged;
        if !both || pieces >= opts.budget {
            return QuadratureResult { value: IntervalValue::new(l, h.max(l), Status::BudgetExceeded), pieces };
        }
        n *= 2;
    }
    // The gap between the polygons still dominates.
    let r = integrate(fractal, &Region::Ball(*b), alpha, &BallFallback(c), opts);
    QuadratureResult { value: r.value, pieces: pieces + r.pieces }
}

#[derive(Clone, Copy)]
struct ConstantIntegrand(f64);

impl Integrand for ConstantIntegrand {
    fn bounds(&self, _: &Rect) -> (f64, f64) {
        (self.0, self.0)
    }

    fn constant(&self) -> Option<f64> {
        Some(self.0)
    }
}

/// Same constant, without advertising it (forces the indicator path).
struct BallFallback(f64);

impl Integrand for BallFallback {
    fn bounds(&self, _: &Rect) -> (f64, f64) {
        (self.0, self.0)
    }
}

/// Vertex centroid of a convex polygon with the radii of the concentric discs
/// inside and around it.
fn polygon_discs(poly: &[Point2]) -> (Point2, f64, f64) {
    let n = poly.len();
    let c = poly.iter().fold(Point2::new(0.0, 0.0), |acc, p| acc + *p) * (1.0 / n as f64);
    let r_out = poly.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
    let r_in = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let d = b - a;
            (Point2::new(-d.y, d.x).dot(c - a) / d.norm()).max(0.0)
        })
        .fold(f64::INFINITY, f64::min);
    // Shave a little so rounding never admits a point outside.
    (c, r_in * (1.0 - 1e-12), r_out * (1.0 + 1e-12))
}

/// Quadrature over a convex counter-clockwise polygon, optionally multiplied by
/// the indicator of a ball.
pub fn integrate_polygon(
    fractal: &Fractal,
    clip_poly: &[Point2],
    indicator: Option<Ball>,
    alpha: f64,
    integrand: &dyn Integrand,
    opts: &QuadratureOptions,
) -> QuadratureResult {
    let run = run_engine(fractal, clip_poly, indicator, alpha, integrand, opts);
    summarize(run)
}

struct Run<'a> {
    engine: Engine<'a>,
    status: Status,
    pieces: Vec<Piece>,
}

fn run_engine<'a>(
    fractal: &'a Fractal,
    clip_poly: &[Point2],
    indicator: Option<Ball>,
    alpha: f64,
    integrand: &'a dyn Integrand,
    opts: &QuadratureOptions,
) -> Run<'a> {
    let clip = bbox(clip_poly);
    let koch_min = fractal.koch_curve().map(|c| 0.25 * c.hausdorff_bound()).unwrap_or(0.0);
    let mut eng = Engine {
        fractal,
        clip_poly: clip_poly.to_vec(),
        clip_edges: (0..clip_poly.len())
            .map(|i| {
                let (a, b) = (clip_poly[i], clip_poly[(i + 1) % clip_poly.len()]);
                (a, Point2::new(a.y - b.y, b.x - a.x))
            })
            .collect(),
        clip_box: clip,
        clip_disc: polygon_discs(clip_poly),
        indicator,
        alpha,
        integrand,
        koch_min,
        min_size: 1e-12 * clip.width().max(1e-300),
        seq: 0,
        evaluated: 0,
    };
    // Crude reference scale for the divergence heuristic.
    let span = clip.half_diagonal() * 2.0 + fractal.spec().diam();
    let reference = area(clip_poly) * if alpha < 0.0 { span.powf(alpha) } else { span.powf(alpha).max(1.0) };

    let mut totals = Totals::default();
    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Piece> = Vec::new();
    let push = |p: Piece, eng: &Engine, totals: &mut Totals, heap: &mut BinaryHeap<Piece>, settled: &mut Vec<Piece>| {
        totals.add(&p, 1.0);
        if p.width() > 0.0 && eng.refinable(&p) {
            heap.push(p);
        } else {
            settled.push(p);
        }
    };
    for p in eng.roots() {
        push(p, &eng, &mut totals, &mut heap, &mut settled);
    }

    let status = loop {
        if totals.inf_lo > 0 {
            break Status::Divergent;
        }
        if totals.lo > opts.divergence_factor * reference && totals.inf_hi > 0 {
            break Status::Divergent;
        }
        if totals.inf_hi == 0 {
            let width = totals.hi - totals.lo;
            if width <= opts.tol * totals.lo.max(0.0) || (totals.hi <= 0.0 && totals.lo >= 0.0) {
                break Status::Converged;
            }
        }
        if eng.evaluated >= opts.budget {
            break Status::BudgetExceeded;
        }
        let Some(p) = heap.pop() else {
            break Status::BudgetExceeded;
        };
        totals.add(&p, -1.0);
        for child in eng.children(&p) {
            push(child, &eng, &mut totals, &mut heap, &mut settled);
        }
    };

    settled.extend(heap.into_vec());
    Run { engine: eng, status, pieces: settled }
}

fn summarize(run: Run) -> QuadratureResult {
    let Run { engine, status, mut pieces } = run;
    // Recompute in a fixed order to remove drift from the running sums.
    pieces.sort_by_key(|p| p.seq);
    let (mut lo, mut hi) = (0.0, 0.0);
    for p in &pieces {
        lo += p.lo;
        hi += p.hi;
    }
    let value = match status {
        Status::Divergent => IntervalValue::divergent(if lo.is_nan() { f64::INFINITY } else { lo }),
        s => {
            let hi = hi.max(lo);
            IntervalValue::new(lo, hi, s)
        }
    };
    QuadratureResult { value, pieces: engine.evaluated }
}

/// A quadrature node: a piece of the region collapsed to its centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub point: Point2,
    /// Midpoint of the bracket on the piece's weighted area.
    pub weight: f64,
    /// Half-width of that bracket.
    pub spread: f64,
    /// Largest extent of the piece.
    pub size: f64,
    /// Lower bound on the distance of the piece to `E` (0 when unknown).
    pub dist_lo: f64,
}

#[derive(Debug, Clone)]
pub struct NodeSet {
    pub nodes: Vec<Node>,
    pub total: IntervalValue,
    pub pieces: usize,
}

/// Pieces of the weighted-area quadrature of `region`, refined until each is
/// at most `max_size` across, as centroid nodes in a fixed order. Midpoint
/// sums `Σ w·f(node)` approximate `∫_R f dμ_α` for continuous `f`.
pub fn weighted_nodes(
    fractal: &Fractal,
    region: &Region,
    alpha: f64,
    max_size: f64,
    opts: &QuadratureOptions,
) -> NodeSet {
    let poly = match *region {
        Region::Square(s) => rect_polygon(&s.rect()),
        Region::Ball(b) => {
            // Regular polygon with the area of the disc.
            let n = 512usize;
            let t = std::f64::consts::TAU / n as f64;
            let r = b.radius * (t / t.sin()).sqrt();
            regular_polygon(b.center, r, n)
        }
    };
    let Run { mut engine, status, pieces } = run_engine(fractal, &poly, None, alpha, &Unit, opts);
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    let mut stack = pieces;
    if status != Status::Divergent {
        while let Some(p) = stack.pop() {
            let size = p.bbox.width().max(p.bbox.height());
            if size > max_size && engine.refinable(&p) && engine.evaluated < opts.budget {
                stack.extend(engine.children(&p));
            } else {
                out.push(p);
            }
        }
    } else {
        out = stack;
    }
    out.sort_by_key(|p| p.seq);
    let (mut lo, mut hi) = (0.0, 0.0);
    let nodes = out
        .iter()
        .filter(|p| p.hi > 0.0)
        .map(|p| {
            lo += p.lo;
            hi += p.hi;
            let c = match p.kind {
                Kind::Cell { full: true, cell } => centroid(&cell.footprint()),
                _ => centroid(&p.poly),
            };
            Node {
                point: c,
                weight: 0.5 * (p.lo + p.hi),
                spread: 0.5 * (p.hi - p.lo),
                size: p.bbox.width().max(p.bbox.height()),
                dist_lo: engine.distance_lower(p),
            }
        })
        .collect();
    let total = match status {
        Status::Divergent => IntervalValue::divergent(f64::INFINITY),
        s => IntervalValue::new(lo, hi.max(lo), s),
    };
    NodeSet { nodes, total, pieces: engine.evaluated }
}

/// Closed-form values are exact only up to rounding in `powf`/`exp_m1`;
/// widen them so the bracket still contains the true value.
const ROUNDING: f64 = 1e-13;

fn rounded(v: f64) -> (f64, f64) {
    if v.is_finite() {
        (v - ROUNDING * v.abs(), v + ROUNDING * v.abs())
    } else {
        (v, v)
    }
}
