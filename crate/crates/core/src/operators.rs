//! The Whitney extension `Su`, averaged traces, and the fractional maximal
//! function `M_γ`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::polygon::{clip_rect, Polygon};
use crate::geometry::{Ball, Fractal, Point2, Rect, Status};
use crate::measures::quadrature::{integrate_polygon, regular_polygon, weighted_nodes, QuadratureOptions, Unit};
use crate::measures::BoundarySampleSet;
use crate::whitney::WhitneyCover;
use crate::{Error, Result};

/// A function on the ambient ball.
pub trait AmbientFunction: Sync {
    fn value(&self, x: Point2) -> f64;

    /// Exact gradient where known.
    fn gradient(&self, _x: Point2) -> Option<Point2> {
        None
    }

    /// Global Lipschitz constant where known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

/// An [`AmbientFunction`] given by closures.
#[derive(Clone)]
pub struct FnAmbient {
    f: Arc<dyn Fn(Point2) -> f64 + Send + Sync>,
    grad: Option<Arc<dyn Fn(Point2) -> Point2 + Send + Sync>>,
    lip: Option<f64>,
}

impl FnAmbient {
    pub fn new(f: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        FnAmbient { f: Arc::new(f), grad: None, lip: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(Point2) -> Point2 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lip = Some(l);
        self
    }

    pub fn constant(c: f64) -> Self {
        FnAmbient::new(move |_| c).with_gradient(|_| Point2::new(0.0, 0.0)).with_lipschitz(0.0)
    }
}

impl AmbientFunction for FnAmbient {
    fn value(&self, x: Point2) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: Point2) -> Option<Point2> {
        self.grad.as_ref().map(|g| g(x))
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lip
    }
}

#[derive(Clone)]
enum BoundaryRule {
    Rule(Arc<dyn Fn(Point2) -> f64 + Send + Sync>),
    Table(Vec<f64>),
}

/// A function on `E`: a rule evaluated at sample points, or a table of values
/// aligned with a [`BoundarySampleSet`].
#[derive(Clone)]
pub struct BoundaryFunction {
    rule: BoundaryRule,
    pub lipschitz: Option<f64>,
}

impl std::fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.rule {
            BoundaryRule::Rule(_) => write!(f, "BoundaryFunction::Rule(L = {:?})", self.lipschitz),
            BoundaryRule::Table(v) => write!(f, "BoundaryFunction::Table({} values)", v.len()),
        }
    }
}

impl BoundaryFunction {
    pub fn rule(f: impl Fn(Point2) -> f64 + Send + Sync + 'static, lipschitz: Option<f64>) -> Self {
        BoundaryFunction { rule: BoundaryRule::Rule(Arc::new(f)), lipschitz }
    }

    /// Restriction of an ambient function to `E`.
    pub fn restrict<F: AmbientFunction + Clone + Send + 'static>(f: &F) -> Self {
        let g = f.clone();
        BoundaryFunction::rule(move |x| g.value(x), f.lipschitz())
    }

    pub fn table(values: Vec<f64>, lipschitz: Option<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("boundary value {i} is not finite")));
        }
        Ok(BoundaryFunction { rule: BoundaryRule::Table(values), lipschitz })
    }

    /// Values at the sample points.
    pub fn values_on(&self, samples: &BoundarySampleSet) -> Result<Vec<f64>> {
        match &self.rule {
            BoundaryRule::Rule(f) => {
                let v: Vec<f64> = samples.points.iter().map(|s| f(s.point)).collect();
                match v.iter().position(|x| !x.is_finite()) {
                    Some(i) => Err(Error::InvalidInput(format!("boundary value {i} is not finite"))),
                    None => Ok(v),
                }
            }
            BoundaryRule::Table(v) if v.len() == samples.len() => Ok(v.clone()),
            BoundaryRule::Table(v) => Err(Error::InvalidInput(format!(
                "table has {} values for {} samples",
                v.len(),
                samples.len()
            ))),
        }
    }
}

/// Uniform bins over the sample points for ball queries.
#[derive(Debug, Clone)]
pub struct SampleIndex {
    points: Vec<Point2>,
    origin: Point2,
    bin: f64,
    bins: HashMap<(i64, i64), Vec<usize>>,
}

/// Ball queries touching more bins than this scan all points instead.
const MAX_BINS_PER_QUERY: i64 = 4096;

impl SampleIndex {
    pub fn new(points: Vec<Point2>) -> Self {
        let b = bounding_rect(&points);
        let extent = b.width().max(b.height()).max(1e-12);
        let bin = extent / 256.0;
        let mut bins: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            bins.entry(Self::key(b.min, bin, *p)).or_default().push(i);
        }
        SampleIndex { points, origin: b.min, bin, bins }
    }

    fn key(origin: Point2, bin: f64, p: Point2) -> (i64, i64) {
        (((p.x - origin.x) / bin).floor() as i64, ((p.y - origin.y) / bin).floor() as i64)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of points in the open ball `B(c, r)`, ascending.
    pub fn in_ball(&self, c: Point2, r: f64) -> Vec<usize> {
        let lo = Self::key(self.origin, self.bin, c - Point2::new(r, r));
        let hi = Self::key(self.origin, self.bin, c + Point2::new(r, r));
        let mut out = Vec::new();
        if (hi.0 - lo.0 + 1) * (hi.1 - lo.1 + 1) > MAX_BINS_PER_QUERY {
            out.extend((0..self.points.len()).filter(|&i| self.points[i].dist(c) < r));
            return out;
        }
        for ix in lo.0..=hi.0 {
            for iy in lo.1..=hi.1 {
                if let Some(v) = self.bins.get(&(ix, iy)) {
                    out.extend(v.iter().copied().filter(|&i| self.points[i].dist(c) < r));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Index of the point nearest to `x` (lowest index on ties).
    pub fn nearest(&self, x: Point2) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let (kx, ky) = Self::key(self.origin, self.bin, x);
        let mut best: Option<(f64, usize)> = None;
        for ring in 0..64i64 {
            for ix in kx - ring..=kx + ring {
                for iy in ky - ring..=ky + ring {
                    if (ix - kx).abs() != ring && (iy - ky).abs() != ring {
                        continue;
                    }
                    for &i in self.bins.get(&(ix, iy)).into_iter().flatten() {
                        let d = self.points[i].dist(x);
                        if best.map_or(true, |(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
            }
            // Points outside the searched square are at least `ring·bin` away.
            if let Some((d, _)) = best {
                if d <= ring as f64 * self.bin {
                    return best.map(|b| b.1);
                }
            }
        }
        (0..self.points.len()).min_by(|&a, &b| self.points[a].dist(x).total_cmp(&self.points[b].dist(x)))
    }
}

fn bounding_rect(points: &[Point2]) -> Rect {
    let mut r = Rect { min: Point2::new(f64::INFINITY, f64::INFINITY), max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY) };
    for p in points {
        r.min = Point2::new(r.min.x.min(p.x), r.min.y.min(p.y));
        r.max = Point2::new(r.max.x.max(p.x), r.max.y.max(p.y));
    }
    if points.is_empty() {
        r = Rect { min: Point2::new(0.0, 0.0), max: Point2::new(1.0, 1.0) };
    }
    r
}

/// `Su = Σ u_{2B_{i,j}} φ_{i,j}` for a boundary function `u`, with the
/// `ν`-averages read off a fixed sample set and computed on first use.
pub struct Extension<'a> {
    cover: &'a WhitneyCover,
    samples: &'a BoundarySampleSet,
    index: SampleIndex,
    values: Vec<f64>,
    averages: Vec<OnceLock<Option<f64>>>,
}

impl<'a> Extension<'a> {
    pub fn new(cover: &'a WhitneyCover, samples: &'a BoundarySampleSet, u: &BoundaryFunction) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("extension needs boundary samples".into()));
        }
        let values = u.values_on(samples)?;
        Ok(Extension {
            cover,
            samples,
            index: SampleIndex::new(samples.positions()),
            values,
            averages: (0..cover.len()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn cover(&self) -> &WhitneyCover {
        self.cover
    }

    pub fn samples(&self) -> &BoundarySampleSet {
        self.samples
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.values
    }

    /// `⨍_{2B} u dν` for cell `id`.
    pub fn average(&self, id: usize) -> Result<f64> {
        let v = *self.averages[id].get_or_init(|| {
            let cell = &self.cover.cells[id];
            // Large balls hold most of the samples; compensated sums keep
            // averages of constants exact to a few ulps.
            let (mut num, mut den) = (Neumaier::default(), Neumaier::default());
            for i in self.index.in_ball(cell.center, cell.avg_radius()) {
                let m = self.samples.points[i].mass;
                num.add(m * self.values[i]);
                den.add(m);
            }
            let (num, den) = (num.total(), den.total());
            (den > 0.0).then(|| num / den)
        });
        v.ok_or(Error::EmptyAverage(id))
    }

    /// `Su(x)`. Below the cover resolution the value of `u` at the nearest
    /// boundary sample is returned.
    pub fn eval(&self, x: Point2) -> Result<f64> {
        if !x.is_finite() || !self.cover.ball.contains(x) {
            return Err(Error::InvalidInput(format!("({}, {}) lies outside the cover ball", x.x, x.y)));
        }
        let d = self.cover.fractal().distance(x);
        if d <= self.cover.resolution() {
            let i = self.index.nearest(x).expect("nonempty sample set");
            return Ok(self.values[i]);
        }
        let w = self.cover.partition_eval(x)?;
        let mut s = 0.0;
        for (id, phi) in w.entries {
            s += phi * self.average(id)?;
        }
        Ok(s)
    }

    /// `∇Su(x) = Σ a_i ∇φ_i(x)` from the exact partition gradients; zero in
    /// the resolution shell, where `Su` is locally constant.
    pub fn exact_gradient(&self, x: Point2) -> Result<Point2> {
        if !x.is_finite() || !self.cover.ball.contains(x) {
            return Err(Error::InvalidInput(format!("({}, {}) lies outside the cover ball", x.x, x.y)));
        }
        if self.cover.fractal().distance(x) <= self.cover.resolution() {
            return Ok(Point2::new(0.0, 0.0));
        }
        let mut g = Point2::new(0.0, 0.0);
        for (id, _, dphi) in self.cover.partition_gradient(x)? {
            g = g + dphi * self.average(id)?;
        }
        Ok(g)
    }

    /// Central differences of `Su` at step `h ≤ dist(x, E)/10`.
    pub fn gradient(&self, x: Point2, h: f64) -> Result<Point2> {
        let d = self.cover.fractal().distance(x);
        if !(h > 0.0) || h > d / 10.0 {
            return Err(Error::Precondition(format!("step {h} exceeds dist(x, E)/10 = {}", d / 10.0)));
        }
        let ex = Point2::new(h, 0.0);
        let ey = Point2::new(0.0, h);
        Ok(Point2::new(
            (self.eval(x + ex)? - self.eval(x - ex)?) / (2.0 * h),
            (self.eval(x + ey)? - self.eval(x - ey)?) / (2.0 * h),
        ))
    }

    /// Gradient estimates at steps `h` and `h/2`.
    pub fn gradient_richardson(&self, x: Point2, h: f64) -> Result<(Point2, Point2)> {
        Ok((self.gradient(x, h)?, self.gradient(x, 0.5 * h)?))
    }
}

impl AmbientFunction for Extension<'_> {
    /// `NaN` outside the cover ball.
    fn value(&self, x: Point2) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }

    /// The exact gradient; `None` where `Su` is undefined.
    fn gradient(&self, x: Point2) -> Option<Point2> {
        self.exact_gradient(x).ok()
    }
}

/// `Su(x)` in one call. Prefer [`Extension`] for repeated evaluation.
pub fn extend(cover: &WhitneyCover, samples: &BoundarySampleSet, u: &BoundaryFunction, x: Point2) -> Result<f64> {
    Extension::new(cover, samples, u)?.eval(x)
}

/// Neumaier's compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.comp
    }
}

/// Default relative stabilization tolerance for traces.
pub const TRACE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub x: Point2,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Last average.
    pub limit: f64,
    /// The last two averages agree within the tolerance.
    pub stabilized: bool,
    pub status: Status,
}

/// Midpoint sums over quadrature nodes of `B(x, r)` at most `r/8` across.
fn ball_average(fractal: &Fractal, f: &dyn AmbientFunction, x: Point2, r: f64, alpha: f64, tol: f64) -> (f64, Status) {
    let opts = QuadratureOptions { tol, budget: 2_000_000, ..Default::default() };
    let set = weighted_nodes(fractal, &crate::Region::Ball(Ball::new(x, r)), alpha, r / 8.0, &opts);
    if set.total.status == Status::Divergent {
        return (f64::NAN, Status::Divergent);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for n in &set.nodes {
        num += n.weight * f.value(n.point);
        den += n.weight;
    }
    (if den > 0.0 { num / den } else { f64::NAN }, set.total.status)
}

/// `μ_α`-averages of `f` over `B(x, r_m)` along a decreasing schedule.
pub fn trace(
    fractal: &Fractal,
    f: &dyn AmbientFunction,
    x: Point2,
    schedule: &[f64],
    alpha: f64,
    tol: f64,
) -> Result<TraceReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("trace schedule must be strictly decreasing".into()));
    }
    if schedule.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidInput("trace radii must lie in (0, 1]".into()));
    }
    let mut values = Vec::with_capacity(schedule.len());
    let mut status = Status::Converged;
    for &r in schedule {
        let (v, s) = ball_average(fractal, f, x, r, alpha, tol.max(1e-3));
        status = status.worst(s);
        values.push(v);
    }
    let limit = *values.last().unwrap();
    let stabilized = values.len() >= 2 && {
        let a = values[values.len() - 2];
        (a - limit).abs() <= tol * limit.abs().max(1e-12) || (a - limit).abs() <= 1e-12
    };
    Ok(TraceReport { x, radii: schedule.to_vec(), values, limit, stabilized, status })
}

/// Default radius schedule of the maximal function: `2^0, …, 2^{-12}`.
pub fn default_radii() -> Vec<f64> {
    (0..=12).map(|k| 2f64.powi(-k)).collect()
}

/// Nonnegative inputs of the maximal function.
#[derive(Clone, Copy)]
pub enum MaximalInput<'a> {
    Constant(f64),
    /// Indicator of an axis-parallel rectangle.
    Indicator(Rect),
    Function(&'a dyn AmbientFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub value: f64,
    /// Radius attaining the maximum.
    pub radius: f64,
    pub status: Status,
}

/// Regular polygon with the area of `B(c, r)`.
fn disc_polygon(c: Point2, r: f64) -> Polygon {
    let n = 256usize;
    let t = std::f64::consts::TAU / n as f64;
    regular_polygon(c, r * (t / t.sin()).sqrt(), n)
}

/// Context shared by maximal-function evaluations: caches `μ_α(B(x, r))`.
pub struct Maximal<'a> {
    fractal: &'a Fractal,
    alpha: f64,
    gamma: f64,
    radii: Vec<f64>,
    tol: f64,
    denominators: std::sync::Mutex<HashMap<(u64, u64, u64), (f64, Status)>>,
}

impl<'a> Maximal<'a> {
    pub fn new(fractal: &'a Fractal, alpha: f64, gamma: f64, radii: Vec<f64>, tol: f64) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidInput("maximal radii must lie in (0, 1]".into()));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("γ = {gamma} must be nonnegative")));
        }
        Ok(Maximal { fractal, alpha, gamma, radii, tol, denominators: Default::default() })
    }

    fn opts(&self) -> QuadratureOptions {
        QuadratureOptions { tol: self.tol, budget: 2_000_000, ..Default::default() }
    }

    fn ball_measure(&self, x: Point2, r: f64) -> (f64, Status) {
        let key = (x.x.to_bits(), x.y.to_bits(), r.to_bits());
        if let Some(v) = self.denominators.lock().unwrap().get(&key) {
            return *v;
        }
        let poly = disc_polygon(x, r);
        let v = integrate_polygon(self.fractal, &poly, None, self.alpha, &Unit, &self.opts()).value;
        let out = (v.mid(), v.status);
        self.denominators.lock().unwrap().insert(key, out);
        out
    }

    fn average(&self, h: MaximalInput, x: Point2, r: f64) -> (f64, Status) {
        match h {
            MaximalInput::Constant(c) => (c, Status::Converged),
            MaximalInput::Indicator(s) => {
                if s.distance_to(x) >= r {
                    return (0.0, Status::Converged);
                }
                let part = clip_rect(&disc_polygon(x, r), &s);
                if part.len() < 3 {
                    return (0.0, Status::Converged);
                }
                let num = integrate_polygon(self.fractal, &part, None, self.alpha, &Unit, &self.opts()).value;
                let (den, ds) = self.ball_measure(x, r);
                ((num.mid() / den).min(1.0), num.status.worst(ds))
            }
            MaximalInput::Function(f) => ball_average(self.fractal, f, x, r, self.alpha, self.tol),
        }
    }

    /// `max_r r^γ ⨍_{B(x,r)} h dμ_α` over the schedule: a lower bound for
    /// the supremum over all radii in `(0, 1]`.
    pub fn eval(&self, h: MaximalInput, x: Point2) -> MaximalValue {
        let mut best = MaximalValue { value: 0.0, radius: self.radii[0], status: Status::Converged };
        for &r in &self.radii {
            let (avg, s) = self.average(h, x, r);
            best.status = best.status.worst(s);
            if s == Status::Divergent {
                best.value = f64::NAN;
                return best;
            }
            let v = r.powf(self.gamma) * avg;
            if v > best.value {
                best.value = v;
                best.radius = r;
            }
        }
        best
    }
}

/// `M_γ h(x)` for one point.
pub fn fractional_maximal(
    fractal: &Fractal,
    h: MaximalInput,
    gamma: f64,
    x: Point2,
    radii: &[f64],
    alpha: f64,
    tol: f64,
) -> Result<MaximalValue> {
    Ok(Maximal::new(fractal, alpha, gamma, radii.to_vec(), tol)?.eval(h, x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeRow {
    pub input: usize,
    pub t: f64,
    /// `ν({M_γ h > t})` estimated on the sample set.
    pub level_set: f64,
    /// `∫ h dμ_α`.
    pub integral: f64,
    /// `t·ν({M_γ h > t}) / ∫ h dμ_α`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub rows: Vec<WeakTypeRow>,
    /// Smallest constant valid for every row.
    pub constant: f64,
    pub status: Status,
}

/// Weak-type table `ν({M_γ h > t}) ≤ (C/t) ∫ h dμ_α` for rectangle indicators.
pub fn weak_type_experiment(
    fractal: &Fractal,
    samples: &BoundarySampleSet,
    inputs: &[Rect],
    gamma: f64,
    alpha: f64,
    t_grid: &[f64],
    radii: &[f64],
    tol: f64,
) -> Result<WeakTypeReport> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("thresholds must be positive".into()));
    }
    let m = Maximal::new(fractal, alpha, gamma, radii.to_vec(), tol)?;
    let mut rows = Vec::new();
    let mut status = Status::Converged;
    for (k, s) in inputs.iter().enumerate() {
        let sq = crate::geometry::polygon::rect_polygon(s);
        let integral = integrate_polygon(fractal, &sq, None, alpha, &Unit, &m.opts()).value;
        status = status.worst(integral.status);
        let values: Vec<MaximalValue> =
            samples.points.par_iter().map(|p| m.eval(MaximalInput::Indicator(*s), p.point)).collect();
        for v in &values {
            status = status.worst(v.status);
        }
        for &t in t_grid {
            let level_set: f64 =
                samples.points.iter().zip(&values).filter(|(_, v)| v.value > t).map(|(p, _)| p.mass).sum();
            let level_set = level_set / samples.total_mass;
            rows.push(WeakTypeRow {
                input: k,
                t,
                level_set,
                integral: integral.mid(),
                ratio: t * level_set / integral.mid(),
            });
        }
    }
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(WeakTypeReport { rows, constant, status })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongTypeReport {
    /// `∫_E (M_γ(g^q))^{p/q} dν`.
    pub lhs: f64,
    /// `∫_B g^p dμ_α`.
    pub rhs: f64,
    pub constant: f64,
    pub n_samples: usize,
    pub status: Status,
}

/// Discrete strong-type check for `g = |∇f|`.
#[allow(clippy::too_many_arguments)]
pub fn strong_type_experiment(
    fractal: &Fractal,
    f: &dyn AmbientFunction,
    samples: &BoundarySampleSet,
    ball: &Ball,
    p: f64,
    q: f64,
    gamma: f64,
    alpha: f64,
    radii: &[f64],
    tol: f64,
) -> Result<StrongTypeReport> {
    struct GradPow<'a>(&'a dyn AmbientFunction, f64);
    impl AmbientFunction for GradPow<'_> {
        fn value(&self, x: Point2) -> f64 {
            self.0.gradient(x).map(|g| g.norm().powf(self.1)).unwrap_or(f64::NAN)
        }
    }
    let m = Maximal::new(fractal, alpha, gamma, radii.to_vec(), tol)?;
    let gq = GradPow(f, q);
    let values: Vec<MaximalValue> =
        samples.points.par_iter().map(|s| m.eval(MaximalInput::Function(&gq), s.point)).collect();
    let mut status = Status::Converged;
    let mut lhs = 0.0;
    for (s, v) in samples.points.iter().zip(&values) {
        status = status.worst(v.status);
        lhs += s.mass * v.value.powf(p / q);
    }
    lhs /= samples.total_mass;
    let opts = QuadratureOptions { tol, budget: 4_000_000, ..Default::default() };
    let nodes = weighted_nodes(fractal, &crate::Region::Ball(*ball), alpha, ball.radius / 64.0, &opts);
    status = status.worst(nodes.total.status);
    let gp = GradPow(f, p);
    let rhs: f64 = nodes.nodes.iter().map(|n| n.weight * gp.value(n.point)).sum();
    Ok(StrongTypeReport { lhs, rhs, constant: lhs / rhs, n_samples: samples.len(), status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::boundary_sample;
    use crate::whitney::build_whitney;

    fn setup(level: i32, n: usize) -> (Fractal, WhitneyCover, BoundarySampleSet) {
        let f = Fractal::carpet();
        let cover = build_whitney(&f, f.spec().ambient_ball(), level).unwrap();
        let samples = boundary_sample(f.spec(), n, 7);
        (f, cover, samples)
    }

    #[test]
    fn sample_index_matches_brute_force() {
        let s = boundary_sample(Fractal::gasket().spec(), 3000, 1);
        let idx = SampleIndex::new(s.positions());
        for (c, r) in [(Point2::new(0.3, 0.2), 0.05), (Point2::new(0.5, 0.4), 2.0), (Point2::new(0.9, 0.1), 0.2)] {
            let brute: Vec<usize> = (0..s.len()).filter(|&i| s.points[i].point.dist(c) < r).collect();
            assert_eq!(idx.in_ball(c, r), brute);
        }
        for x in [Point2::new(0.31, 0.22), Point2::new(-1.0, 2.0)] {
            let brute = (0..s.len())
                .min_by(|&a, &b| s.points[a].point.dist(x).total_cmp(&s.points[b].point.dist(x)))
                .unwrap();
            assert_eq!(s.points[idx.nearest(x).unwrap()].point.dist(x), s.points[brute].point.dist(x));
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let (_, cover, samples) = setup(7, 4000);
        let u = BoundaryFunction::rule(|_| 2.5, Some(0.0));
        let su = Extension::new(&cover, &samples, &u).unwrap();
        for x in [Point2::new(0.5, 0.5), Point2::new(-0.2, 0.4), Point2::new(0.5, 0.001), Point2::new(1.5, 1.2)] {
            assert!((su.eval(x).unwrap() - 2.5).abs() < 1e-12);
        }
        let g = su.gradient(Point2::new(0.5, 0.5), 1e-3).unwrap();
        assert!(g.norm() < 1e-9);
        assert!(matches!(su.gradient(Point2::new(0.5, 0.5), 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn extension_is_linear() {
        let (_, cover, samples) = setup(6, 2000);
        let u = BoundaryFunction::rule(|p| p.x, Some(1.0));
        let v = BoundaryFunction::rule(|p| (3.0 * p.y).sin(), Some(3.0));
        let w = BoundaryFunction::rule(|p| 2.0 * p.x - 0.5 * (3.0 * p.y).sin(), None);
        let (su, sv, sw) = (
            Extension::new(&cover, &samples, &u).unwrap(),
            Extension::new(&cover, &samples, &v).unwrap(),
            Extension::new(&cover, &samples, &w).unwrap(),
        );
        for x in [Point2::new(0.5, 0.5), Point2::new(0.05, 0.3), Point2::new(1.7, 0.9)] {
            let lhs = sw.eval(x).unwrap();
            let rhs = 2.0 * su.eval(x).unwrap() - 0.5 * sv.eval(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} {rhs}");
        }
    }

    #[test]
    fn exact_gradient_matches_differences() {
        let (_, cover, samples) = setup(6, 2000);
        let u = BoundaryFunction::rule(|p| p.x * p.y, Some(2.0));
        let su = Extension::new(&cover, &samples, &u).unwrap();
        let mut rng = crate::rng::stream(11, 0);
        let mut checked = 0;
        while checked < 200 {
            let x = cover.random_valid_point(&mut rng);
            let d = cover.fractal().distance(x);
            let h = 1e-7;
            // Skip points whose stencil straddles a hat's support or center.
            let fd = match su.gradient(x, h) {
                Ok(g) if d > cover.resolution() + 2.0 * h => g,
                _ => continue,
            };
            let g = su.exact_gradient(x).unwrap();
            let near_kink = cover.cells.iter().any(|c| {
                let r = x.dist(c.center);
                r < 1e-5 || (r - c.radius).abs() < 1e-5
            });
            if near_kink {
                continue;
            }
            assert!((g - fd).norm() < 1e-5 * (1.0 + g.norm()), "{x:?}: {g:?} vs {fd:?}");
            checked += 1;
        }
    }

    #[test]
    fn constant_maximal_is_one() {
        let f = Fractal::carpet();
        let v = fractional_maximal(&f, MaximalInput::Constant(1.0), 0.3, Point2::new(0.0, 0.0), &default_radii(), -0.05, 1e-2)
            .unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.radius, 1.0);
    }

    #[test]
    fn trace_of_constant_and_linear() {
        let f = Fractal::carpet();
        let c = FnAmbient::constant(4.0);
        let x = Point2::new(1.0 / 3.0, 1.0 / 3.0);
        let rep = trace(&f, &c, x, &[0.25, 0.125, 0.0625], -0.05, 1e-3).unwrap();
        assert!(rep.values.iter().all(|v| (v - 4.0).abs() < 1e-12) && rep.stabilized);
        let lin = FnAmbient::new(|p| p.x + 2.0 * p.y).with_lipschitz(5f64.sqrt());
        let rep = trace(&f, &lin, x, &[0.25, 0.125, 0.0625], -0.05, 1e-3).unwrap();
        for (r, v) in rep.radii.iter().zip(&rep.values) {
            assert!((v - (x.x + 2.0 * x.y)).abs() <= 5f64.sqrt() * r);
        }
        assert!(trace(&f, &lin, x, &[0.1, 0.2], 0.0, 1e-3).is_err());
    }
}
