//! Discrete Besov energies on `E` (double-sum and dyadic forms), weighted
//! Sobolev energies on `B`, and the norm-ratio experiments built from them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Ball, Fractal, FractalSpec, IntervalValue, Point2, Region, Status};
use crate::measures::quadrature::{weighted_nodes, QuadratureOptions};
use crate::measures::{boundary_sample, nu_ball, BoundarySampleSet, WeightParams};
use crate::operators::{AmbientFunction, BoundaryFunction, Extension};
use crate::rng::stream;
use crate::whitney::WhitneyCover;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyForm {
    DoubleSum,
    Dyadic,
    Sobolev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub form: EnergyForm,
    /// Boundary samples, or quadrature nodes for Sobolev energies.
    pub n_samples: usize,
    pub theta: Option<f64>,
    pub p: f64,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    /// Coincident pairs (double sum) or empty balls (dyadic) left out.
    pub skipped: usize,
    /// Ball masses taken from cell counting instead of the sample.
    pub fallbacks: usize,
    /// `∫ |f|^p dμ_α` alongside the gradient term (Sobolev only).
    pub mass: Option<f64>,
    /// Quadrature enclosure of `μ_α` of the region (Sobolev only).
    pub measure: Option<IntervalValue>,
    pub status: Status,
}

/// Below this many samples in `B(x_i, d_ij)` the empirical ball mass is
/// replaced by [`nu_ball`].
pub const NU_FLOOR_COUNT: usize = 8;

/// Rows per accumulation tile.
const TILE: usize = 1024;

fn check_besov(samples: &BoundarySampleSet, theta: f64, p: f64) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("Besov energies need at least two samples".into()));
    }
    if !(theta > 0.0 && theta < 1.0) || !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("need θ ∈ (0,1) and p ≥ 1, got θ={theta}, p={p}")));
    }
    Ok(())
}

/// Sample indices sorted by distance from sample `i` (ties by index).
fn sorted_row(pts: &[Point2], i: usize) -> Vec<(f64, usize)> {
    let mut row: Vec<(f64, usize)> = pts.iter().enumerate().map(|(j, q)| (pts[i].dist(*q), j)).collect();
    row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    row
}

/// Runs `f` on every row in tiles of [`TILE`] rows and adds the row results
/// in index order, so the sum does not depend on scheduling.
fn tiled_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let tiles: Vec<Vec<T>> = (0..n.div_ceil(TILE))
        .into_par_iter()
        .map(|t| (t * TILE..((t + 1) * TILE).min(n)).map(&f).collect())
        .collect();
    tiles.into_iter().flatten().collect()
}

/// Cells a sixteenth of the radius across resolve `ν(B(x, r))` well enough
/// for the fallback; deeper levels only cost time.
fn fallback_level(spec: &FractalSpec, r: f64, cap: u32) -> u32 {
    let mut k = 0;
    while k < cap && spec.cell_diam(k) > r / 16.0 {
        k += 1;
    }
    k
}

/// `(1/N²) Σ_{i≠j} |u_i − u_j|^p / (d_ij^{θp} ν̂(B(x_i, d_ij)))`.
pub fn besov_energy(
    spec: &FractalSpec,
    samples: &BoundarySampleSet,
    u: &BoundaryFunction,
    theta: f64,
    p: f64,
    level: u32,
) -> Result<EnergyReport> {
    check_besov(samples, theta, p)?;
    let values = u.values_on(samples)?;
    let pts = samples.positions();
    let total = samples.total_mass;
    let rows = tiled_rows(pts.len(), |i| {
        let row = sorted_row(&pts, i);
        let (mut acc, mut skipped, mut fallbacks) = (0.0, 0usize, 0usize);
        // Mass and count of the samples strictly closer than the current one.
        let (mut closer_mass, mut closer) = (0.0, 0usize);
        let mut k = 0;
        while k < row.len() {
            let d = row[k].0;
            let mut end = k;
            while end < row.len() && row[end].0 == d {
                end += 1;
            }
            for &(_, j) in &row[k..end] {
                if j == i {
                    continue;
                }
                if d == 0.0 {
                    skipped += 1;
                    continue;
                }
                let nu = if closer < NU_FLOOR_COUNT {
                    fallbacks += 1;
                    nu_ball(spec, pts[i], d, fallback_level(spec, d, level))
                } else {
                    closer_mass / total
                };
                let diff = (values[i] - values[j]).abs();
                if diff > 0.0 {
                    let m = samples.points[i].mass * samples.points[j].mass / (total * total);
                    acc += m * diff.powf(p) / (d.powf(theta * p) * nu);
                }
            }
            for &(_, j) in &row[k..end] {
                closer_mass += samples.points[j].mass;
                closer += 1;
            }
            k = end;
        }
        (acc, skipped, fallbacks)
    });
    let mut report = EnergyReport {
        value: 0.0,
        form: EnergyForm::DoubleSum,
        n_samples: pts.len(),
        theta: Some(theta),
        p,
        alpha: None,
        seed: Some(samples.seed),
        skipped: 0,
        fallbacks: 0,
        mass: None,
        measure: None,
        status: Status::Converged,
    };
    for (v, s, f) in rows {
        report.value += v;
        report.skipped += s;
        report.fallbacks += f;
    }
    Ok(report)
}

/// Largest `n ≤ n_max` with `d < 2^{-n}`, if any.
fn dyadic_scale(d: f64, n_max: usize) -> Option<usize> {
    if d >= 1.0 {
        return None;
    }
    if d == 0.0 {
        return Some(n_max);
    }
    let mut n = (-d.log2()).floor().max(0.0) as i64;
    while n > 0 && d >= (-(n as f64)).exp2() {
        n -= 1;
    }
    while d < (-(n as f64 + 1.0)).exp2() {
        n += 1;
    }
    Some((n as usize).min(n_max))
}

/// `Σ_{n=0}^{n_max} 2^{nθp} ∫_E ⨍_{B(x, 2^{-n})} |u(x) − u(y)|^p dν(y) dν(x)`
/// with empirical balls.
pub fn besov_energy_dyadic(
    samples: &BoundarySampleSet,
    u: &BoundaryFunction,
    theta: f64,
    p: f64,
    n_max: u32,
) -> Result<EnergyReport> {
    check_besov(samples, theta, p)?;
    if n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let values = u.values_on(samples)?;
    let pts = samples.positions();
    let total = samples.total_mass;
    let n_max = n_max as usize;
    let rows = tiled_rows(pts.len(), |i| {
        // Bin every sample by the smallest ball B(x_i, 2^{-n}) containing it;
        // the ball sums are then suffix sums over the bins.
        let (mut bm, mut bd) = (vec![0.0; n_max + 1], vec![0.0; n_max + 1]);
        let mut bc = vec![0usize; n_max + 1];
        for (j, q) in pts.iter().enumerate() {
            let d = pts[i].dist(*q);
            let Some(n) = dyadic_scale(d, n_max) else { continue };
            let w = samples.points[j].mass;
            bm[n] += w;
            bd[n] += w * (values[i] - values[j]).abs().powf(p);
            bc[n] += 1;
        }
        let (mut acc, mut empty) = (0.0, 0usize);
        let (mut m, mut s, mut k) = (0.0, 0.0, 0usize);
        for n in (0..=n_max).rev() {
            m += bm[n];
            s += bd[n];
            k += bc[n];
            if k <= 1 {
                empty += 1;
                continue;
            }
            acc += 2f64.powf(n as f64 * theta * p) * s / m;
        }
        (acc * samples.points[i].mass / total, empty)
    });
    let mut report = EnergyReport {
        value: 0.0,
        form: EnergyForm::Dyadic,
        n_samples: pts.len(),
        theta: Some(theta),
        p,
        alpha: None,
        seed: Some(samples.seed),
        skipped: 0,
        fallbacks: 0,
        mass: None,
        measure: None,
        status: Status::Converged,
    };
    for (v, e) in rows {
        report.value += v;
        report.skipped += e;
    }
    Ok(report)
}

/// `∫_R |∇f|^p dμ_α` (as `value`) and `∫_R |f|^p dμ_α` (as `mass`) by
/// midpoint sums over quadrature nodes at most `node_size` across.
pub fn sobolev_energy(
    fractal: &Fractal,
    f: &dyn AmbientFunction,
    region: &Region,
    alpha: f64,
    p: f64,
    node_size: f64,
    tol: f64,
) -> Result<EnergyReport> {
    if !(p >= 1.0) || !(node_size > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("bad Sobolev parameters p={p}, size={node_size}, tol={tol}")));
    }
    let opts = QuadratureOptions { tol, budget: 4_000_000, ..Default::default() };
    let set = weighted_nodes(fractal, region, alpha, node_size, &opts);
    let mut report = EnergyReport {
        value: f64::NAN,
        form: EnergyForm::Sobolev,
        n_samples: set.nodes.len(),
        theta: None,
        p,
        alpha: Some(alpha),
        seed: None,
        skipped: 0,
        fallbacks: 0,
        mass: None,
        measure: Some(set.total),
        status: set.total.status,
    };
    if set.total.status == Status::Divergent {
        return Ok(report);
    }
    let terms: Vec<(f64, f64)> = set
        .nodes
        .par_iter()
        .map(|n| {
            let v = f.value(n.point);
            let g = f.gradient(n.point).unwrap_or_else(|| {
                let h = (n.size / 16.0).max(1e-9);
                let ex = Point2::new(h, 0.0);
                let ey = Point2::new(0.0, h);
                Point2::new(
                    (f.value(n.point + ex) - f.value(n.point - ex)) / (2.0 * h),
                    (f.value(n.point + ey) - f.value(n.point - ey)) / (2.0 * h),
                )
            });
            (n.weight * g.norm().powf(p), n.weight * v.abs().powf(p))
        })
        .collect();
    let (mut grad, mut mass) = (0.0, 0.0);
    for (g, m) in terms {
        if g.is_nan() || m.is_nan() {
            report.skipped += 1;
            continue;
        }
        grad += g;
        mass += m;
    }
    report.value = grad;
    report.mass = Some(mass);
    Ok(report)
}

/// Short pairs kept for local refinement.
const REFINE_PAIRS: usize = 16;

/// Where [`lipschitz_estimate`] draws its pairs.
#[derive(Debug, Clone, Copy)]
pub enum PairDomain<'a> {
    /// Uniform points in the ball, short pairs at distance `2^{-8}`.
    Ball(Ball),
    /// A uniformly chosen Whitney cell, then a uniform point in its ball, so
    /// every scale down to the cover resolution is visited; short pairs
    /// shrink with the cell. On top of the random pairs every cell is swept
    /// with a grid of short pairs in four directions. Points within the
    /// resolution are left out.
    Whitney(&'a WhitneyCover),
}

impl PairDomain<'_> {
    fn ball(&self) -> &Ball {
        match self {
            PairDomain::Ball(b) => b,
            PairDomain::Whitney(c) => &c.ball,
        }
    }

    /// A point and the length of short pairs there.
    fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng) -> (Point2, f64) {
        let (center, radius, short) = match self {
            PairDomain::Ball(b) => (b.center, b.radius, SHORT_PAIR),
            PairDomain::Whitney(c) => {
                let cell = &c.cells[rng.gen_range(0..c.cells.len())];
                (cell.center, cell.radius, SHORT_PAIR.min(cell.radius / 4.0))
            }
        };
        let r = radius * rng.gen::<f64>().sqrt();
        let t = std::f64::consts::TAU * rng.gen::<f64>();
        (center + Point2::new(r * t.cos(), r * t.sin()), short)
    }

    fn admits(&self, x: Point2) -> bool {
        match self {
            PairDomain::Ball(b) => b.contains(x),
            PairDomain::Whitney(c) => c.ball.contains(x) && c.fractal().distance(x) > c.resolution(),
        }
    }
}

const SHORT_PAIR: f64 = 1.0 / 256.0;

/// Grid points per side in the sweep of a Whitney cell.
const SWEEP: usize = 6;
const GRADIENT_SWEEP: usize = 12;

type PairCandidate = (f64, Point2, f64, f64);

/// Keeps the best [`REFINE_PAIRS`] candidates, best first.
fn offer(top: &mut Vec<PairCandidate>, e: PairCandidate) {
    if top.len() < REFINE_PAIRS || e.0 > top[top.len() - 1].0 {
        let at = top.partition_point(|o| o.0 >= e.0);
        top.insert(at, e);
        top.truncate(REFINE_PAIRS);
    }
}

struct Sweep {
    best: f64,
    pairs: Vec<PairCandidate>,
}

/// Grid sweep of every Whitney cell: short pairs in four directions and,
/// when `f` has a gradient, `|∇f|` climbed by a pattern search from the best
/// grid points. Gradients of a partition-of-unity extension jump across the
/// edges of the hat supports, so the supremum sits on thin strips a grid
/// alone keeps missing.
fn sweep_cells(
    f: &dyn AmbientFunction,
    cover: &WhitneyCover,
    short_pair: &(dyn Fn(Point2, f64, f64) -> Option<f64> + Sync),
) -> Sweep {
    let admits = |x: Point2| cover.ball.contains(x) && cover.fractal().distance(x) > cover.resolution();
    let grad_norm = |x: Point2| if admits(x) { f.gradient(x).map(|g| g.norm()) } else { None };
    // (|∇f|, point, cell radius) of the best grid points.
    type GradCandidate = (f64, Point2, f64);
    let per_cell: Vec<(Vec<PairCandidate>, Vec<GradCandidate>)> = cover
        .cells
        .par_iter()
        .map(|cell| {
            let len = SHORT_PAIR.min(cell.radius / 4.0);
            let (mut pairs, mut grads): (Vec<PairCandidate>, Vec<GradCandidate>) = (Vec::new(), Vec::new());
            let grid = |k: usize| (2.0 * k as f64 + 1.0) / SWEEP as f64 - 1.0;
            for a in 0..SWEEP {
                for b in 0..SWEEP {
                    let m = cell.center + Point2::new(grid(a), grid(b)) * (0.5 * cell.radius);
                    for dir in 0..4 {
                        let t = dir as f64 * std::f64::consts::FRAC_PI_4;
                        if let Some(q) = short_pair(m, t, len) {
                            offer(&mut pairs, (q, m, t, len));
                        }
                    }
                }
            }
            let grid = |k: usize| (2.0 * k as f64 + 1.0) / GRADIENT_SWEEP as f64 - 1.0;
            for a in 0..GRADIENT_SWEEP {
                for b in 0..GRADIENT_SWEEP {
                    let m = cell.center + Point2::new(grid(a), grid(b)) * (0.5 * cell.radius);
                    let Some(g) = grad_norm(m) else { continue };
                    if grads.len() < REFINE_PAIRS || g > grads[grads.len() - 1].0 {
                        let at = grads.partition_point(|e: &GradCandidate| e.0 >= g);
                        grads.insert(at, (g, m, cell.radius));
                        grads.truncate(REFINE_PAIRS);
                    }
                }
            }
            (pairs, grads)
        })
        .collect();
    let mut pairs = Vec::new();
    let mut grads: Vec<GradCandidate> = Vec::new();
    for (p, g) in per_cell {
        for e in p {
            offer(&mut pairs, e);
        }
        grads.extend(g);
    }
    let mut best = pairs.first().map_or(0.0, |e| e.0);
    grads.sort_by(|x, y| y.0.total_cmp(&x.0));
    grads.truncate(4 * REFINE_PAIRS);
    let climbed: Vec<f64> = grads
        .par_iter()
        .map(|&(mut g, mut x, r)| {
            let mut step = r / (2.0 * GRADIENT_SWEEP as f64);
            while step > 1e-7 * r {
                let moves = [Point2::new(step, 0.0), Point2::new(-step, 0.0), Point2::new(0.0, step), Point2::new(0.0, -step)];
                match moves
                    .iter()
                    .filter_map(|&v| grad_norm(x + v).map(|g2| (g2, x + v)))
                    .filter(|e| e.0 > g)
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                {
                    Some(e) => (g, x) = e,
                    None => step *= 0.5,
                }
            }
            g
        })
        .collect();
    for g in climbed {
        best = best.max(g);
    }
    Sweep { best, pairs }
}

/// Largest difference quotient over `n_pairs` global pairs and as many short
/// pairs drawn from `domain` (plus the sweep of a Whitney domain, which also
/// takes `|∇f|` into account: a gradient is a limit of difference quotients). The best short pairs are then moved and turned
/// by a pattern search, since a supremum found by blind sampling depends
/// heavily on the draw. Pairs with an undefined value are skipped.
pub fn lipschitz_estimate(f: &dyn AmbientFunction, domain: PairDomain<'_>, n_pairs: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, 0);
    let quotient = |a: Point2, b: Point2| {
        if !domain.admits(a) || !domain.admits(b) || a.dist(b) == 0.0 {
            return None;
        }
        let q = (f.value(a) - f.value(b)).abs() / a.dist(b);
        q.is_finite().then_some(q)
    };
    let short_pair = |m: Point2, t: f64, len: f64| {
        let h = Point2::new(0.5 * len * t.cos(), 0.5 * len * t.sin());
        quotient(m - h, m + h)
    };
    if domain.ball().radius <= 0.0 || matches!(domain, PairDomain::Whitney(c) if c.is_empty()) {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    // (quotient, midpoint, angle, length) of the best short pairs, best first.
    let mut top: Vec<PairCandidate> = Vec::with_capacity(REFINE_PAIRS + 1);
    for _ in 0..n_pairs {
        let (x, short) = domain.draw(&mut rng);
        let (y, _) = domain.draw(&mut rng);
        let t = std::f64::consts::TAU * rng.gen::<f64>();
        let z = x + Point2::new(short * t.cos(), short * t.sin());
        if let Some(q) = quotient(x, y) {
            best = best.max(q);
        }
        if let Some(q) = quotient(x, z) {
            best = best.max(q);
            offer(&mut top, (q, (x + z) * 0.5, t, short));
        }
    }
    if let PairDomain::Whitney(cover) = domain {
        let sweep = sweep_cells(f, cover, &short_pair);
        best = best.max(sweep.best);
        for e in sweep.pairs {
            offer(&mut top, e);
        }
    }
    for (mut q, mut m, mut t, len) in top {
        let (mut step, mut turn) = (len, 0.5);
        for _ in 0..60 {
            let moves = [
                (m + Point2::new(step, 0.0), t),
                (m - Point2::new(step, 0.0), t),
                (m + Point2::new(0.0, step), t),
                (m - Point2::new(0.0, step), t),
                (m, t + turn),
                (m, t - turn),
            ];
            match moves
                .iter()
                .filter_map(|&(m2, t2)| short_pair(m2, t2, len).map(|q2| (q2, m2, t2)))
                .filter(|e| e.0 > q)
                .max_by(|a, b| a.0.total_cmp(&b.0))
            {
                Some((q2, m2, t2)) => (q, m, t) = (q2, m2, t2),
                None => {
                    step *= 0.5;
                    turn *= 0.5;
                }
            }
        }
        best = best.max(q);
    }
    best
}

/// The fixed family of test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `x₁`.
    Coordinate,
    /// `(1 − |x − c|²/ρ²)²` on `B(c, ρ)`.
    RadialBump { center: Point2, rho: f64 },
    /// `|x − p₀|^e`.
    DistPower { p0: Point2, exponent: f64 },
    /// Difference of two radial bumps of radius `rho`.
    TwoBump { c1: Point2, c2: Point2, rho: f64 },
    Constant(f64),
}

fn bump(x: Point2, c: Point2, rho: f64) -> (f64, Point2) {
    let s = (x - c).dot(x - c) / (rho * rho);
    if s >= 1.0 {
        return (0.0, Point2::new(0.0, 0.0));
    }
    ((1.0 - s) * (1.0 - s), (x - c) * (-4.0 * (1.0 - s) / (rho * rho)))
}

/// `max_t 4t(1 − t²) = 8/(3√3)`: the bump's Lipschitz constant times `ρ`.
const BUMP_LIP: f64 = 1.539_600_717_839_002;

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Coordinate => "coordinate",
            TestFunction::RadialBump { .. } => "radial_bump",
            TestFunction::DistPower { .. } => "dist_power",
            TestFunction::TwoBump { .. } => "two_bump",
            TestFunction::Constant(_) => "constant",
        }
    }

    /// The family, placed relative to the bounding box of `E`.
    pub fn family(fractal: &Fractal) -> Vec<TestFunction> {
        let (min, ext) = e_box(fractal);
        let at = |u: f64, v: f64| Point2::new(min.x + u * ext.x, min.y + v * ext.y);
        let hole = match fractal.kind() {
            crate::FractalKind::Carpet => Point2::new(0.5, 0.5),
            _ => Point2::new(0.5, crate::geometry::SQRT3 / 6.0),
        };
        vec![
            TestFunction::Coordinate,
            TestFunction::RadialBump { center: hole, rho: 0.4 },
            TestFunction::DistPower { p0: at(0.25, 0.75), exponent: 0.9 },
            TestFunction::TwoBump { c1: at(1.0 / 6.0, 1.0 / 6.0), c2: at(5.0 / 6.0, 5.0 / 6.0), rho: 0.25 },
            TestFunction::Constant(1.0),
        ]
    }

    pub fn boundary(&self) -> BoundaryFunction {
        let f = *self;
        BoundaryFunction::rule(move |x| f.value(x), self.lipschitz())
    }
}

/// Lower corner and extent of the bounding box of `E`.
fn e_box(fractal: &Fractal) -> (Point2, Point2) {
    match fractal.kind() {
        crate::FractalKind::Carpet => (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
        crate::FractalKind::Gasket => (Point2::new(0.0, 0.0), Point2::new(1.0, crate::geometry::SQRT3 / 2.0)),
        crate::FractalKind::Koch => {
            let h = crate::geometry::SQRT3 / 6.0;
            (Point2::new(0.0, -h), Point2::new(1.0, 4.0 * h))
        }
    }
}

impl AmbientFunction for TestFunction {
    fn value(&self, x: Point2) -> f64 {
        match *self {
            TestFunction::Coordinate => x.x,
            TestFunction::RadialBump { center, rho } => bump(x, center, rho).0,
            TestFunction::DistPower { p0, exponent } => x.dist(p0).powf(exponent),
            TestFunction::TwoBump { c1, c2, rho } => bump(x, c1, rho).0 - bump(x, c2, rho).0,
            TestFunction::Constant(c) => c,
        }
    }

    fn gradient(&self, x: Point2) -> Option<Point2> {
        Some(match *self {
            TestFunction::Coordinate => Point2::new(1.0, 0.0),
            TestFunction::RadialBump { center, rho } => bump(x, center, rho).1,
            TestFunction::DistPower { p0, exponent } => {
                let r = x.dist(p0);
                if r == 0.0 {
                    return None;
                }
                (x - p0) * (exponent * r.powf(exponent - 2.0))
            }
            TestFunction::TwoBump { c1, c2, rho } => bump(x, c1, rho).1 - bump(x, c2, rho).1,
            TestFunction::Constant(_) => Point2::new(0.0, 0.0),
        })
    }

    fn lipschitz(&self) -> Option<f64> {
        match *self {
            TestFunction::Coordinate => Some(1.0),
            TestFunction::RadialBump { rho, .. } | TestFunction::TwoBump { rho, .. } => Some(BUMP_LIP / rho),
            TestFunction::DistPower { .. } => None,
            TestFunction::Constant(_) => Some(0.0),
        }
    }
}

/// Settings of the norm-ratio experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSettings {
    /// Boundary samples in the Besov sums.
    pub n_samples: usize,
    /// Boundary samples behind the `ν`-averages of `Su`; the Besov sums use
    /// the first `n_samples` of them.
    pub n_extension_samples: usize,
    pub seeds: Vec<u64>,
    /// Level used by the `ν` floor.
    pub nu_level: u32,
    /// `n_max` of the dyadic Besov energy in the extension experiment.
    pub dyadic_levels: u32,
    /// Node size for Sobolev energies.
    pub node_size: f64,
    pub tol: f64,
}

impl Default for RatioSettings {
    fn default() -> Self {
        RatioSettings { n_samples: 2000, n_extension_samples: 20_000, seeds: vec![1, 2, 3], nu_level: 10, dyadic_levels: 6, node_size: 1.0 / 32.0, tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub function: String,
    pub seed: u64,
    pub numerator: f64,
    pub denominator: f64,
    /// `None` when the denominator is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub function: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Every ratio finite and `max ≤ 1.25·min`.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub params: WeightParams,
    /// Form of the Besov energy on the `E` side.
    pub besov_form: EnergyForm,
    pub rows: Vec<RatioRow>,
    pub summaries: Vec<RatioSummary>,
}

/// `None` when the denominator vanishes: for constants both sides are zero
/// (up to rounding in `Su`) and the quotient says nothing.
fn ratio(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

fn summarize(name: &str, params: WeightParams, besov_form: EnergyForm, rows: Vec<RatioRow>) -> RatioReport {
    let mut names: Vec<String> = Vec::new();
    for r in &rows {
        if !names.contains(&r.function) {
            names.push(r.function.clone());
        }
    }
    let summaries = names
        .into_iter()
        .map(|f| {
            let rs: Vec<Option<f64>> = rows.iter().filter(|r| r.function == f).map(|r| r.ratio).collect();
            if rs.iter().all(|r| r.is_none()) {
                return RatioSummary { function: f, min: None, max: None, stable: None };
            }
            let vals: Vec<f64> = rs.iter().map(|r| r.unwrap_or(f64::NAN)).collect();
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let finite = vals.iter().all(|v| v.is_finite());
            RatioSummary { function: f, min: Some(min), max: Some(max), stable: Some(finite && max <= 1.25 * min) }
        })
        .collect();
    RatioReport { name: name.to_string(), params, besov_form, rows, summaries }
}

/// `Besov(u|_E) / ∫_B |∇u|^p dμ_α` for each test function and seed.
pub fn trace_ratio_experiment(
    fractal: &Fractal,
    params: WeightParams,
    ball: &Ball,
    family: &[TestFunction],
    settings: &RatioSettings,
) -> Result<RatioReport> {
    let region = Region::Ball(*ball);
    let mut rows = Vec::new();
    let sobolev: Vec<EnergyReport> = family
        .iter()
        .map(|f| sobolev_energy(fractal, f, &region, params.alpha, params.p, settings.node_size, settings.tol))
        .collect::<Result<_>>()?;
    for &seed in &settings.seeds {
        let samples = boundary_sample(fractal.spec(), settings.n_samples, seed);
        for (f, sob) in family.iter().zip(&sobolev) {
            let b = besov_energy(fractal.spec(), &samples, &f.boundary(), params.theta, params.p, settings.nu_level)?;
            rows.push(RatioRow {
                function: f.name().into(),
                seed,
                numerator: b.value,
                denominator: sob.value,
                ratio: ratio(b.value, sob.value),
            });
        }
    }
    Ok(summarize("trace", params, EnergyForm::DoubleSum, rows))
}

/// `∫_B |∇Su|^p dμ_α / Besov(u)` and `∫_B |Su|^p dμ_α / ∫_E |u|^p dν` for
/// each test function and seed.
///
/// `Besov(u)` is the dyadic form here. Extension exponents sit close to 1,
/// where the squared double-sum kernel is not `ν⊗ν`-integrable: the sampled
/// double sum is then dominated by its closest pair and wanders between seeds.
pub fn extension_ratio_experiment(
    fractal: &Fractal,
    params: WeightParams,
    cover: &WhitneyCover,
    family: &[TestFunction],
    settings: &RatioSettings,
) -> Result<(RatioReport, RatioReport)> {
    let region = Region::Ball(cover.ball);
    let (mut grad_rows, mut mass_rows) = (Vec::new(), Vec::new());
    for &seed in &settings.seeds {
        let samples = boundary_sample(fractal.spec(), settings.n_extension_samples, seed);
        let besov_samples = samples.prefix(settings.n_samples);
        for f in family {
            let u = f.boundary();
            let su = Extension::new(cover, &samples, &u)?;
            let sob = sobolev_energy(fractal, &su, &region, params.alpha, params.p, settings.node_size, settings.tol)?;
            let b = besov_energy_dyadic(&besov_samples, &u, params.theta, params.p, settings.dyadic_levels)?;
            let lp: f64 = su
                .boundary_values()
                .iter()
                .zip(&samples.points)
                .map(|(v, s)| s.mass * v.abs().powf(params.p))
                .sum::<f64>()
                / samples.total_mass;
            grad_rows.push(RatioRow {
                function: f.name().into(),
                seed,
                numerator: sob.value,
                denominator: b.value,
                ratio: ratio(sob.value, b.value),
            });
            let mass = sob.mass.unwrap_or(f64::NAN);
            mass_rows.push(RatioRow { function: f.name().into(), seed, numerator: mass, denominator: lp, ratio: ratio(mass, lp) });
        }
    }
    Ok((
        summarize("extension_gradient", params, EnergyForm::Dyadic, grad_rows),
        summarize("extension_mass", params, EnergyForm::Dyadic, mass_rows),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_have_zero_energy() {
        let f = Fractal::carpet();
        let s = boundary_sample(f.spec(), 300, 1);
        let c = BoundaryFunction::rule(|_| 3.0, Some(0.0));
        assert_eq!(besov_energy(f.spec(), &s, &c, 0.4, 2.0, 8).unwrap().value, 0.0);
        assert_eq!(besov_energy_dyadic(&s, &c, 0.4, 2.0, 10).unwrap().value, 0.0);
    }

    #[test]
    fn homogeneity_is_exact_for_powers_of_two() {
        let f = Fractal::gasket();
        let s = boundary_sample(f.spec(), 400, 2);
        let u = BoundaryFunction::rule(|p| p.x * p.y, None);
        let v = BoundaryFunction::rule(|p| -2.0 * p.x * p.y, None);
        let a = besov_energy(f.spec(), &s, &u, 0.3, 2.0, 8).unwrap().value;
        let b = besov_energy(f.spec(), &s, &v, 0.3, 2.0, 8).unwrap().value;
        assert_eq!(b, 4.0 * a);
        let a = besov_energy_dyadic(&s, &u, 0.3, 3.0, 8).unwrap().value;
        let b = besov_energy_dyadic(&s, &v, 0.3, 3.0, 8).unwrap().value;
        assert_eq!(b, 8.0 * a);
    }

    #[test]
    fn double_sum_matches_naive_loop() {
        let f = Fractal::carpet();
        let s = boundary_sample(f.spec(), 60, 5);
        let u = BoundaryFunction::rule(|p| p.x + p.y * p.y, None);
        let vals = u.values_on(&s).unwrap();
        let n = s.len();
        let mut naive = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = s.points[i].point.dist(s.points[j].point);
                if i == j || d == 0.0 {
                    continue;
                }
                let count = (0..n).filter(|&k| s.points[i].point.dist(s.points[k].point) < d).count();
                let nu = if count < NU_FLOOR_COUNT {
                    nu_ball(f.spec(), s.points[i].point, d, fallback_level(f.spec(), d, 8))
                } else {
                    count as f64 / n as f64
                };
                naive += (vals[i] - vals[j]).powi(2) / (d.powf(0.8) * nu) / (n * n) as f64;
            }
        }
        let e = besov_energy(f.spec(), &s, &u, 0.4, 2.0, 8).unwrap();
        assert!((e.value - naive).abs() < 1e-10 * naive, "{} {naive}", e.value);
    }

    #[test]
    fn sobolev_of_coordinate_on_unit_square() {
        let f = Fractal::carpet();
        let sq = Region::Square(crate::Square::from_corner(0.0, 0.0, 1.0));
        let e = sobolev_energy(&f, &TestFunction::Coordinate, &sq, 0.0, 2.0, 1.0 / 16.0, 1e-6).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9, "{e:?}");
        // ∫ x² over the unit square.
        assert!((e.mass.unwrap() - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn test_family_gradients_match_differences() {
        let f = Fractal::carpet();
        for tf in TestFunction::family(&f) {
            for x in [Point2::new(0.3, 0.4), Point2::new(0.61, 0.52), Point2::new(0.1, 0.2)] {
                let h = 1e-6;
                let g = tf.gradient(x).unwrap();
                let gx = (tf.value(x + Point2::new(h, 0.0)) - tf.value(x - Point2::new(h, 0.0))) / (2.0 * h);
                let gy = (tf.value(x + Point2::new(0.0, h)) - tf.value(x - Point2::new(0.0, h))) / (2.0 * h);
                assert!((g.x - gx).abs() < 1e-6 && (g.y - gy).abs() < 1e-6, "{tf:?} at {x:?}");
            }
        }
    }

    #[test]
    fn lipschitz_of_coordinate() {
        let b = Ball::new(Point2::new(0.5, 0.5), 1.5);
        let l = lipschitz_estimate(&TestFunction::Coordinate, PairDomain::Ball(b), 2000, 3);
        assert!(l <= 1.0 + 1e-12 && l > 1.0 - 1e-6, "{l}");
        assert_eq!(lipschitz_estimate(&TestFunction::Constant(2.0), PairDomain::Ball(b), 100, 3), 0.0);
    }
}
