//! Empirical checks of the structural hypotheses on `μ_α`: doubling, the
//! Muckenhoupt `A_p` window, codimension comparison and the snowflake shell
//! condition, plus the parameter admissibility predicates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Ball, Fractal, FractalSpec, IntervalValue, KochCurve, Point2, Rect, Region, Square, Status};
use crate::measures::{mu_alpha_region, MeasureEstimate, WeightParams};
use crate::rng::stream;
use crate::{Error, Result};

/// Smallest and largest sampled side lengths.
pub const SIDE_RANGE: (f64, f64) = (1.0 / 2187.0, 9.0);

/// Budget per quadrature inside surveys.
pub const SURVEY_BUDGET: usize = 2_000_000;

/// Square number `index` of the survey stream `seed`: center uniform over
/// `2B`, side log-uniform over [`SIDE_RANGE`], redrawn until it meets `B`.
pub fn sample_square(spec: &FractalSpec, seed: u64, index: u64) -> Square {
    let b = spec.ambient_ball();
    let mut rng = stream(seed, index);
    let (ls0, ls1) = (SIDE_RANGE.0.ln(), SIDE_RANGE.1.ln());
    loop {
        let rad = 2.0 * b.radius * rng.gen::<f64>().sqrt();
        let t = std::f64::consts::TAU * rng.gen::<f64>();
        let c = b.center + Point2::new(rad * t.cos(), rad * t.sin());
        let side = rng.gen_range(ls0..ls1).exp();
        let sq = Square::new(c, side);
        if sq.rect().distance_to(b.center) < b.radius {
            return sq;
        }
    }
}

/// One surveyed square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveySample {
    pub index: usize,
    pub square: Square,
    /// `NaN` when the ratio is undefined (divergent or zero denominator).
    pub ratio: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub n_samples: usize,
    pub seed: u64,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `(level, value)` pairs over the finite ratios.
    pub quantiles: Vec<(f64, f64)>,
    /// The maximum moved by less than 10% when the sample was doubled.
    pub stable: bool,
    /// Maximum over the doubled sample.
    pub max_ratio_doubled: f64,
    pub divergent: usize,
    pub budget_exceeded: usize,
    pub undefined: usize,
    /// Worst status over the first `n_samples` squares.
    pub status: Status,
    /// Whether α lies in the admissible window (A_p surveys only).
    pub in_window: Option<bool>,
    /// All `2·n_samples` squares; the report statistics use the first half.
    pub samples: Vec<SurveySample>,
}

const QUANTILE_LEVELS: [f64; 4] = [0.1, 0.5, 0.9, 0.99];

fn summarize(n: usize, seed: u64, samples: Vec<SurveySample>) -> SurveyReport {
    let first = &samples[..n];
    let finite: Vec<f64> = first.iter().map(|s| s.ratio).filter(|r| r.is_finite()).collect();
    let all_max = samples
        .iter()
        .map(|s| s.ratio)
        .filter(|r| r.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = finite.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = if sorted.is_empty() {
        Vec::new()
    } else {
        QUANTILE_LEVELS
            .iter()
            .map(|&q| {
                let i = ((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1);
                (q, sorted[i])
            })
            .collect()
    };
    let count = |st: Status| first.iter().filter(|s| s.status == st).count();
    let status = first.iter().fold(Status::Converged, |acc, s| acc.worst(s.status));
    SurveyReport {
        n_samples: n,
        seed,
        max_ratio: max,
        min_ratio: min,
        quantiles,
        stable: !finite.is_empty() && (all_max - max).abs() < 0.1 * max,
        max_ratio_doubled: all_max,
        divergent: count(Status::Divergent),
        budget_exceeded: count(Status::BudgetExceeded),
        undefined: first.iter().filter(|s| s.ratio.is_nan()).count(),
        status,
        in_window: None,
        samples,
    }
}

fn run_survey<F>(spec: &FractalSpec, n: usize, seed: u64, eval: F) -> Result<SurveyReport>
where
    F: Fn(&Square) -> Result<(f64, Status)> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidInput("survey needs at least one square".into()));
    }
    let samples = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let sq = sample_square(spec, seed, i as u64);
            let (ratio, status) = eval(&sq)?;
            Ok(SurveySample { index: i, square: sq, ratio, status })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(n, seed, samples))
}

fn ratio_of(num: &MeasureEstimate, den: &MeasureEstimate) -> (f64, Status) {
    let status = num.status().worst(den.status());
    if status == Status::Divergent || den.value.mid() <= 0.0 {
        return (f64::NAN, status);
    }
    (num.value.mid() / den.value.mid(), status)
}

/// `μ_α(3S)/μ_α(S)` over random squares.
pub fn doubling_survey(fractal: &Fractal, alpha: f64, n: usize, seed: u64, tol: f64) -> Result<SurveyReport> {
    run_survey(fractal.spec(), n, seed, |sq| {
        let small = mu_alpha_region(fractal, &Region::Square(*sq), alpha, tol, SURVEY_BUDGET)?;
        let big = mu_alpha_region(fractal, &Region::Square(sq.scaled(3.0)), alpha, tol, SURVEY_BUDGET)?;
        Ok(ratio_of(&big, &small))
    })
}

/// `(⨍_S ω)(⨍_S ω^{-1/(p-1)})^{p-1}` for `ω = dist(·, E)^α`.
pub fn ap_product(fractal: &Fractal, s: &Square, alpha: f64, p: f64, tol: f64) -> Result<IntervalValue> {
    if p <= 1.0 {
        return Err(Error::InvalidInput(format!("p = {p} must exceed 1")));
    }
    let region = Region::Square(*s);
    let m = s.area();
    let w = mu_alpha_region(fractal, &region, alpha, tol, SURVEY_BUDGET)?.value;
    let dual = mu_alpha_region(fractal, &region, -alpha / (p - 1.0), tol, SURVEY_BUDGET)?.value;
    let status = w.status.worst(dual.status);
    if status == Status::Divergent {
        return Ok(IntervalValue::divergent(w.lo / m * (dual.lo / m).powf(p - 1.0)));
    }
    let lo = w.lo / m * (dual.lo / m).powf(p - 1.0);
    let hi = w.hi / m * (dual.hi / m).powf(p - 1.0);
    Ok(IntervalValue::new(lo, hi.max(lo), status))
}

/// `Q − 2 < α < (p − 1)(2 − Q)`.
pub fn ap_window(spec: &FractalSpec, p: f64) -> (f64, f64) {
    let q = spec.hausdorff_dim;
    (q - 2.0, (p - 1.0) * (2.0 - q))
}

/// Supremum of [`ap_product`] over random squares.
pub fn ap_survey(fractal: &Fractal, alpha: f64, p: f64, n: usize, seed: u64, tol: f64) -> Result<SurveyReport> {
    let mut rep = run_survey(fractal.spec(), n, seed, |sq| {
        let v = ap_product(fractal, sq, alpha, p, tol)?;
        let r = if v.status == Status::Divergent { f64::NAN } else { v.mid() };
        Ok((r, v.status))
    })?;
    let (lo, hi) = ap_window(fractal.spec(), p);
    rep.in_window = Some(alpha > lo && alpha < hi);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodimensionPoint {
    pub radius: f64,
    pub measure: MeasureEstimate,
    /// `μ_α(B(x, r)) / r^{2+α}`.
    pub ratio: f64,
}

/// `μ_α(B(x, r))/r^{2+α}` along a list of radii.
pub fn codimension_profile(
    fractal: &Fractal,
    alpha: f64,
    x: Point2,
    radii: &[f64],
    tol: f64,
) -> Result<Vec<CodimensionPoint>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::InvalidInput(format!("radius {r} must be positive")));
            }
            let m = mu_alpha_region(fractal, &Region::Ball(Ball::new(x, r)), alpha, tol, SURVEY_BUDGET)?;
            let ratio = if m.status() == Status::Divergent {
                f64::INFINITY
            } else {
                m.value.mid() / r.powf(2.0 + alpha)
            };
            Ok(CodimensionPoint { radius: r, measure: m, ratio })
        })
        .collect()
}

/// `max/min` of the finite ratios of a profile.
pub fn oscillation(profile: &[CodimensionPoint]) -> f64 {
    let finite = profile.iter().map(|p| p.ratio).filter(|r| r.is_finite() && *r > 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in finite {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `β₀ = 2 − log 4/log 3`.
pub fn beta0() -> f64 {
    2.0 - 4f64.ln() / 3f64.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    pub x: Point2,
    pub r: f64,
    pub rho_list: Vec<f64>,
    /// Bracket of `m({y ∈ B(x,r) ∩ Ω : δ(y) ≤ ρ})` per `ρ`.
    pub masses: Vec<MeasureEstimate>,
    /// Point estimates (midpoint rule on the unresolved cells).
    pub estimates: Vec<f64>,
    /// Point estimate of `m(B(x, r) ∩ Ω)`.
    pub ball_mass: f64,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    pub cells: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Tri {
    In,
    Out,
    Unknown,
}

fn meet(a: Tri, b: Tri) -> Tri {
    match (a, b) {
        (Tri::Out, _) | (_, Tri::Out) => Tri::Out,
        (Tri::In, Tri::In) => Tri::In,
        _ => Tri::Unknown,
    }
}

/// Finest cell side relative to the smallest `ρ`.
const SHELL_MIN_CELL: f64 = 1.0 / 32.0;
const SHELL_BUDGET: usize = 20_000_000;

/// Masses of the boundary shells `{δ ≤ ρ}` inside `B(x, r) ∩ Ω`, with `δ`
/// the distance to the polygon `K_n`, by a quadtree that decides cells lying
/// entirely inside or outside each shell and applies the midpoint rule on the
/// finest undecided cells. The log-log slope is fitted over all `ρ` except the
/// two largest.
pub fn shell_profile(x: Point2, r: f64, rhos: &[f64], n_level: u32, tol: f64) -> Result<ShellProfile> {
    let curve = KochCurve::new(n_level)?;
    if rhos.is_empty() || rhos.iter().any(|&rho| !(rho > 0.0 && rho <= r)) {
        return Err(Error::InvalidInput("shell radii must satisfy 0 < ρ ≤ r".into()));
    }
    let rho_min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let s_min = SHELL_MIN_CELL * rho_min;
    let k = rhos.len();
    let (mut lo, mut hi, mut est) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut ball_mass = 0.0;
    let mut cells = 0usize;
    let root = Square::new(x, 2.0 * r).rect();
    let mut stack = vec![root];
    while let Some(rect) = stack.pop() {
        cells += 1;
        if cells > SHELL_BUDGET {
            return Err(Error::Resource(format!("shell quadtree exceeded {SHELL_BUDGET} cells")));
        }
        let ball = if rect.distance_to(x) >= r {
            Tri::Out
        } else if rect.max_distance_to(x) <= r {
            Tri::In
        } else {
            Tri::Unknown
        };
        if ball == Tri::Out {
            continue;
        }
        let c = rect.center();
        let hd = rect.half_diagonal();
        let dc = curve.distance(c);
        let dom = if dc > hd {
            if curve.winding_inside(c) {
                Tri::In
            } else {
                Tri::Out
            }
        } else {
            Tri::Unknown
        };
        if dom == Tri::Out {
            continue;
        }
        let base = meet(ball, dom);
        let states: Vec<Tri> = rhos
            .iter()
            .map(|&rho| {
                let s = if dc + hd <= rho {
                    Tri::In
                } else if dc - hd > rho {
                    Tri::Out
                } else {
                    Tri::Unknown
                };
                meet(base, s)
            })
            .collect();
        let undecided = base == Tri::Unknown || states.contains(&Tri::Unknown);
        if undecided && rect.width() > s_min {
            let m = c;
            stack.push(Rect { min: Point2::new(m.x, m.y), max: rect.max });
            stack.push(Rect { min: Point2::new(rect.min.x, m.y), max: Point2::new(m.x, rect.max.y) });
            stack.push(Rect { min: Point2::new(m.x, rect.min.y), max: Point2::new(rect.max.x, m.y) });
            stack.push(Rect { min: rect.min, max: m });
            continue;
        }
        let area = rect.width() * rect.height();
        let mid_in = c.dist(x) < r && (dom == Tri::In || curve.winding_inside(c));
        if base == Tri::In || (base == Tri::Unknown && mid_in) {
            ball_mass += area;
        }
        for (i, st) in states.iter().enumerate() {
            match st {
                Tri::In => {
                    lo[i] += area;
                    hi[i] += area;
                    est[i] += area;
                }
                Tri::Unknown => {
                    hi[i] += area;
                    if mid_in && dc <= rhos[i] {
                        est[i] += area;
                    }
                }
                Tri::Out => {}
            }
        }
    }
    let masses = (0..k)
        .map(|i| {
            let status = if hi[i] - lo[i] <= tol * lo[i] { Status::Converged } else { Status::BudgetExceeded };
            MeasureEstimate {
                value: IntervalValue::new(lo[i], hi[i], status),
                cells_used: cells,
                tolerance_requested: tol,
            }
        })
        .collect();
    let (slope, intercept) = fit_shell(rhos, &est);
    Ok(ShellProfile {
        x,
        r,
        rho_list: rhos.to_vec(),
        masses,
        estimates: est,
        ball_mass,
        fitted_slope: slope,
        fitted_intercept: intercept,
        cells,
    })
}

/// Least-squares line through `(ln ρ, ln mass)`, dropping the two largest `ρ`
/// when at least four values remain.
fn fit_shell(rhos: &[f64], masses: &[f64]) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = rhos.iter().copied().zip(masses.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() >= 4 {
        pts.truncate(pts.len() - 2);
    }
    let pts: Vec<(f64, f64)> =
        pts.into_iter().filter(|p| p.1 > 0.0).map(|(r, m)| (r.ln(), m.ln())).collect();
    least_squares(&pts)
}

/// Slope and intercept of the least-squares line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Trace theorem hypotheses: `pθ < 1`, `θ < 1 − γ/p`, `α ≤ 0`, `γ > 0`.
pub fn trace_admissible(params: &WeightParams) -> bool {
    params.p * params.theta < 1.0
        && params.theta < params.theta_cut()
        && params.alpha <= 0.0
        && params.gamma > 0.0
        && params.theta > 0.0
}

/// Extension theorem hypotheses: `θ ≥ 1 − γ/p`, `α ≤ 0`, `γ > 0`, `θ ∈ (0,1)`.
pub fn extension_admissible(params: &WeightParams) -> bool {
    params.theta >= params.theta_cut()
        && params.gamma > 0.0
        && params.alpha <= 0.0
        && params.theta > 0.0
        && params.theta < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        let spec = FractalSpec::carpet();
        let w = WeightParams::new(&spec, -0.05, 2.0, 0.4, 1.5).unwrap();
        assert!((w.gamma - 0.0572).abs() < 1e-4);
        assert!(trace_admissible(&w));
        assert!(!extension_admissible(&w));
        let w = WeightParams::new(&spec, -0.05, 2.0, 0.98, 1.5).unwrap();
        assert!(extension_admissible(&w));
        assert!(!trace_admissible(&w));
        for alpha in [-0.1, -0.05, 0.0] {
            let w = WeightParams::new(&spec, alpha, 2.0, 0.6, 1.5).unwrap();
            assert!(!trace_admissible(&w));
        }
    }

    #[test]
    fn window_arithmetic() {
        let (lo, hi) = ap_window(&FractalSpec::carpet(), 2.0);
        assert!((lo + 0.1072).abs() < 1e-4 && (hi - 0.1072).abs() < 1e-4);
        assert!(0.5 > hi && -0.05 > lo && -0.05 < hi);
    }

    #[test]
    fn sampled_squares_meet_the_ambient_ball() {
        let spec = FractalSpec::gasket();
        let b = spec.ambient_ball();
        for i in 0..500 {
            let s = sample_square(&spec, 4, i);
            assert!(s.rect().distance_to(b.center) < b.radius);
            assert!(s.side >= SIDE_RANGE.0 && s.side <= SIDE_RANGE.1);
            assert!(s.center.dist(b.center) <= 2.0 * b.radius);
        }
        assert_eq!(sample_square(&spec, 4, 17), sample_square(&spec, 4, 17));
    }

    #[test]
    fn alpha_zero_doubling_is_nine() {
        let f = Fractal::carpet();
        let rep = doubling_survey(&f, 0.0, 50, 1, 1e-3).unwrap();
        assert!((rep.max_ratio - 9.0).abs() < 2e-3 && (rep.min_ratio - 9.0).abs() < 2e-3);
        assert!(rep.stable);
    }

    #[test]
    fn ap_product_is_at_least_one() {
        let f = Fractal::carpet();
        for i in 0..20 {
            let s = sample_square(f.spec(), 9, i);
            let v = ap_product(&f, &s, -0.05, 2.0, 1e-3).unwrap();
            assert_eq!(v.status, Status::Converged);
            assert!(v.hi >= 1.0 - 1e-3, "{v:?}");
        }
    }

    #[test]
    fn codimension_alpha_zero_is_below_pi() {
        let f = Fractal::carpet();
        let radii: Vec<f64> = (3..8).map(|k| 2f64.powi(-k)).collect();
        for p in codimension_profile(&f, 0.0, Point2::new(0.0, 0.0), &radii, 1e-3).unwrap() {
            assert!(p.ratio <= std::f64::consts::PI * (1.0 + 1e-12));
        }
    }

    #[test]
    fn shell_far_from_boundary_is_empty() {
        let x = Point2::new(0.5, crate::geometry::SQRT3 / 6.0);
        let rhos = [0.01, 0.02, 0.04];
        let p = shell_profile(x, 0.05, &rhos, 4, 0.1).unwrap();
        for m in &p.masses {
            assert_eq!(m.value.hi, 0.0);
        }
        assert!((p.ball_mass - std::f64::consts::PI * 0.0025).abs() < 1e-4);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.7 * i as f64 - 2.0)).collect();
        let (s, c) = least_squares(&pts);
        assert!((s - 0.7).abs() < 1e-12 && (c + 2.0).abs() < 1e-12);
    }
}
