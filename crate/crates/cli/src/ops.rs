//! One function per operation. Each returns a JSON result, a CSV detail
//! table and a few headline numbers that sweeps turn into columns.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use fractal_trace::energies::{
    extension_ratio_experiment, lipschitz_estimate, trace_ratio_experiment, PairDomain, RatioReport, RatioSettings,
    TestFunction,
};
use fractal_trace::geometry::{Rect, SQRT3};
use fractal_trace::measures::{
    boundary_sample, hole_measure_carpet, mu_alpha_region, BoundarySampleSet, DEFAULT_TOL,
};
use fractal_trace::operators::{
    default_radii, trace, weak_type_experiment, AmbientFunction, Extension, TRACE_TOL,
};
use fractal_trace::regularity::{
    ap_survey, ap_window, beta0, codimension_profile, doubling_survey, extension_admissible, oscillation,
    shell_profile, trace_admissible, SurveyReport,
};
use fractal_trace::rng::{stream, SeedSequence};
use fractal_trace::whitney::{build_whitney, overlap_stat, partition_lipschitz_stat, WhitneyCover};
use fractal_trace::{Ball, Fractal, FractalKind, Point2, Region, Square, Status};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Tolerance of the survey-type operations when the config sets none.
pub const SURVEY_TOL: f64 = 1e-2;

pub struct Report {
    pub status: Status,
    pub result: Value,
    pub table: Table,
    pub headline: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal; `inf`, `-inf` and `NaN` pass through.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::BudgetExceeded => "budget_exceeded",
        Status::Divergent => "divergent",
    }
}

/// Objects shared by the points of a sweep.
#[derive(Default)]
pub struct Cache {
    fractals: RefCell<HashMap<(FractalKind, u32), Rc<Fractal>>>,
    covers: RefCell<HashMap<(FractalKind, u32, [u64; 3], i32), Rc<WhitneyCover>>>,
    samples: RefCell<HashMap<(FractalKind, usize, u64), Rc<BoundarySampleSet>>>,
}

impl Cache {
    fn level(cfg: &ExperimentConfig) -> u32 {
        if cfg.fractal == FractalKind::Koch {
            cfg.koch_level
        } else {
            0
        }
    }

    pub fn fractal(&self, cfg: &ExperimentConfig) -> Result<Rc<Fractal>, CliError> {
        let key = (cfg.fractal, Self::level(cfg));
        if let Some(f) = self.fractals.borrow().get(&key) {
            return Ok(f.clone());
        }
        let f = Rc::new(cfg.fractal()?);
        self.fractals.borrow_mut().insert(key, f.clone());
        Ok(f)
    }

    pub fn cover(&self, cfg: &ExperimentConfig, ball: Ball, max_level: i32) -> Result<Rc<WhitneyCover>, CliError> {
        let key = (
            cfg.fractal,
            Self::level(cfg),
            [ball.center.x.to_bits(), ball.center.y.to_bits(), ball.radius.to_bits()],
            max_level,
        );
        if let Some(c) = self.covers.borrow().get(&key) {
            return Ok(c.clone());
        }
        let c = Rc::new(build_whitney(&*self.fractal(cfg)?, ball, max_level)?);
        self.covers.borrow_mut().insert(key, c.clone());
        Ok(c)
    }

    pub fn samples(&self, cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Rc<BoundarySampleSet>, CliError> {
        if n == 0 {
            return Err(CliError::Invalid("sample count must be positive".into()));
        }
        let key = (cfg.fractal, n, seed);
        if let Some(s) = self.samples.borrow().get(&key) {
            return Ok(s.clone());
        }
        let s = Rc::new(boundary_sample(&fractal_trace::FractalSpec::from_kind(cfg.fractal), n, seed));
        self.samples.borrow_mut().insert(key, s.clone());
        Ok(s)
    }
}

/// Hypotheses of the theorems evaluated for the configured weights.
pub fn admissibility(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let spec = fractal_trace::FractalSpec::from_kind(cfg.fractal);
    let w = cfg.weight_params()?;
    let (lo, hi) = ap_window(&spec, w.p);
    Ok(json!({
        "gamma": w.gamma,
        "theta_cut": w.theta_cut(),
        "trace_admissible": trace_admissible(&w),
        "extension_admissible": extension_admissible(&w),
        "ap_window": [lo, hi],
        "in_ap_window": lo < w.alpha && w.alpha < hi,
    }))
}

pub fn execute(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    match cfg.operation.as_str() {
        "measure" => measure(cfg, cache),
        "doubling" => survey(cfg, cache, false),
        "ap" => survey(cfg, cache, true),
        "codimension" => codimension(cfg, cache),
        "shell" => shell(cfg, cache),
        "whitney" => whitney(cfg, cache),
        "extension" => extension(cfg, cache),
        "trace" => trace_op(cfg, cache),
        "maximal" => maximal(cfg, cache),
        "ratio" => ratio(cfg, cache),
        other => Err(CliError::Invalid(format!("unknown operation `{other}`"))),
    }
}

fn point(p: [f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

fn radii_from(exponents: [i32; 2]) -> Result<Vec<f64>, CliError> {
    let [a, b] = exponents;
    if a > b {
        return Err(CliError::Invalid(format!("radius exponents {a}..{b} are reversed")));
    }
    Ok((a..=b).map(|k| 2f64.powi(-k)).collect())
}

fn test_function(fractal: &Fractal, name: &str) -> Result<TestFunction, CliError> {
    TestFunction::family(fractal).into_iter().find(|f| f.name() == name).ok_or_else(|| {
        let names: Vec<&str> = TestFunction::family(fractal).iter().map(|f| f.name()).collect();
        CliError::Invalid(format!("unknown function `{name}` (expected one of {})", names.join(", ")))
    })
}

// ---------------------------------------------------------------- measure

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureParams {
    region: Option<Region>,
    /// Central carpet hole of generation `k` in the corner cell.
    hole_level: Option<u32>,
}

fn measure(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: MeasureParams = cfg.params()?;
    let alpha = cfg.weights.alpha;
    let (region, closed) = match (p.region, p.hole_level) {
        (Some(r), None) => (r, None),
        (None, Some(k)) => {
            if cfg.fractal != FractalKind::Carpet {
                return Err(CliError::Invalid("hole_level is only defined for the carpet".into()));
            }
            if k == 0 {
                return Err(CliError::Invalid("hole_level starts at 1".into()));
            }
            let s = 3f64.powi(-(k as i32));
            (Region::Square(Square::from_corner(s, s, s)), Some(hole_measure_carpet(k, alpha)))
        }
        _ => return Err(CliError::Invalid("measure needs exactly one of `region` and `hole_level`".into())),
    };
    let tol = cfg.tol_or(DEFAULT_TOL);
    let m = mu_alpha_region(&*cache.fractal(cfg)?, &region, alpha, tol, cfg.budget)?;
    let v = m.value;
    let closed_value = closed.map(|c| c.value());
    let brackets = closed_value.map(|c| if c.is_finite() { v.contains(c) } else { v.status == Status::Divergent });
    let mut table = Table::new(&["lo", "hi", "mid", "status", "cells_used", "closed_form"]);
    table.push(vec![num(v.lo), num(v.hi), num(v.mid()), status_name(v.status).into(), m.cells_used.to_string(), opt(closed_value)]);
    let mut headline = vec![("lo".into(), v.lo), ("hi".into(), v.hi)];
    if let Some(c) = closed_value {
        headline.push(("closed_form".into(), c));
    }
    Ok(Report {
        status: v.status,
        result: json!({
            "region": region,
            "alpha": alpha,
            "value": v,
            "mid": v.mid(),
            "cells_used": m.cells_used,
            "tolerance": tol,
            "closed_form": closed_value,
            "brackets_closed_form": brackets,
        }),
        table,
        headline,
    })
}

// ---------------------------------------------------------------- surveys

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveyParams {
    #[serde(default = "thousand")]
    n: usize,
}

fn thousand() -> usize {
    1000
}

fn survey(cfg: &ExperimentConfig, cache: &Cache, ap: bool) -> Result<Report, CliError> {
    let p: SurveyParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let tol = cfg.tol_or(SURVEY_TOL);
    let r: SurveyReport = if ap {
        ap_survey(&f, cfg.weights.alpha, cfg.weights.p, p.n, cfg.seed, tol)?
    } else {
        doubling_survey(&f, cfg.weights.alpha, p.n, cfg.seed, tol)?
    };
    let mut table = Table::new(&["index", "center_x", "center_y", "side", "ratio", "status", "half"]);
    for s in &r.samples {
        table.push(vec![
            s.index.to_string(),
            num(s.square.center.x),
            num(s.square.center.y),
            num(s.square.side),
            num(s.ratio),
            status_name(s.status).into(),
            if s.index < r.n_samples { "first" } else { "second" }.into(),
        ]);
    }
    let mut result = serde_json::to_value(&r).map_err(|e| CliError::Failed(e.to_string()))?;
    if let Value::Object(m) = &mut result {
        m.remove("samples");
        m.insert("tolerance".into(), json!(tol));
    }
    Ok(Report {
        status: r.status,
        result,
        table,
        headline: vec![
            ("max_ratio".into(), r.max_ratio),
            ("max_ratio_doubled".into(), r.max_ratio_doubled),
            ("stable".into(), if r.stable { 1.0 } else { 0.0 }),
        ],
    })
}

// ---------------------------------------------------------------- codimension

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CodimensionParams {
    points: Option<Vec<[f64; 2]>>,
    #[serde(default = "twenty")]
    n_points: usize,
    #[serde(default = "codim_exponents")]
    radius_exponents: [i32; 2],
}

fn twenty() -> usize {
    20
}
fn codim_exponents() -> [i32; 2] {
    [3, 10]
}

fn boundary_points(cfg: &ExperimentConfig, cache: &Cache, given: Option<Vec<[f64; 2]>>, n: usize, stream_id: u64) -> Result<Vec<Point2>, CliError> {
    Ok(match given {
        Some(ps) if ps.is_empty() => return Err(CliError::Invalid("`points` is empty".into())),
        Some(ps) => ps.into_iter().map(point).collect(),
        None => cache.samples(cfg, n, fractal_trace::rng::split(cfg.seed, stream_id))?.positions(),
    })
}

fn codimension(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: CodimensionParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let radii = radii_from(p.radius_exponents)?;
    let tol = cfg.tol_or(SURVEY_TOL);
    let alpha = cfg.weights.alpha;
    let points = boundary_points(cfg, cache, p.points, p.n_points, 0)?;
    let mut table = Table::new(&["point", "x", "y", "radius", "lo", "hi", "ratio", "status"]);
    let mut status = Status::Converged;
    let mut per_point = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let profile = codimension_profile(&f, alpha, *x, &radii, tol)?;
        for c in &profile {
            status = status.worst(c.measure.status());
            table.push(vec![
                k.to_string(),
                num(x.x),
                num(x.y),
                num(c.radius),
                num(c.measure.value.lo),
                num(c.measure.value.hi),
                num(c.ratio),
                status_name(c.measure.status()).into(),
            ]);
        }
        let osc = oscillation(&profile);
        worst = worst.max(osc);
        per_point.push(json!({ "x": x.x, "y": x.y, "oscillation": osc }));
    }
    Ok(Report {
        status,
        result: json!({ "alpha": alpha, "radii": radii, "tolerance": tol, "points": per_point, "worst_oscillation": worst }),
        table,
        headline: vec![("worst_oscillation".into(), worst)],
    })
}

// ---------------------------------------------------------------- shell

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShellParams {
    /// Indices into the vertex list of the snowflake polygon.
    vertices: Option<Vec<usize>>,
    points: Option<Vec<[f64; 2]>>,
    #[serde(default = "half")]
    r: f64,
    #[serde(default = "shell_exponents")]
    rho_exponents: [i32; 2],
    n_level: Option<u32>,
}

fn half() -> f64 {
    0.5
}
fn shell_exponents() -> [i32; 2] {
    [3, 8]
}

fn shell(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    if cfg.fractal != FractalKind::Koch {
        return Err(CliError::Invalid("the shell profile is implemented for the snowflake only".into()));
    }
    let p: ShellParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let curve = f.koch_curve().expect("snowflake has a curve");
    let points: Vec<Point2> = match (p.points, p.vertices) {
        (Some(_), Some(_)) => return Err(CliError::Invalid("give `points` or `vertices`, not both".into())),
        (Some(ps), None) => ps.into_iter().map(point).collect(),
        (None, vs) => {
            let vs = vs.unwrap_or_else(|| {
                let n = curve.vertices().len();
                (0..5).map(|k| k * n / 5).collect()
            });
            vs.iter()
                .map(|&i| {
                    curve.vertices().get(i).copied().ok_or_else(|| {
                        CliError::Invalid(format!("vertex {i} out of range ({} vertices)", curve.vertices().len()))
                    })
                })
                .collect::<Result<_, _>>()?
        }
    };
    if points.is_empty() {
        return Err(CliError::Invalid("no shell points".into()));
    }
    let rhos = radii_from(p.rho_exponents)?;
    // Cells stop at ρ_min/32, which leaves the smallest shell bracketed to
    // roughly 12%; a tighter default would always report an exhausted budget.
    let tol = cfg.tol_or(0.25);
    let n_level = p.n_level.unwrap_or(cfg.koch_level);
    let target = beta0();
    let mut table = Table::new(&["point", "x", "y", "rho", "estimate", "mass_lo", "mass_hi", "status"]);
    let mut status = Status::Converged;
    let mut per_point = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let s = shell_profile(*x, p.r, &rhos, n_level, tol)?;
        for ((rho, est), m) in s.rho_list.iter().zip(&s.estimates).zip(&s.masses) {
            status = status.worst(m.status());
            table.push(vec![
                k.to_string(),
                num(x.x),
                num(x.y),
                num(*rho),
                num(*est),
                num(m.value.lo),
                num(m.value.hi),
                status_name(m.status()).into(),
            ]);
        }
        worst = worst.max((s.fitted_slope - target).abs());
        per_point.push(json!({
            "x": x.x, "y": x.y, "slope": s.fitted_slope, "intercept": s.fitted_intercept, "ball_mass": s.ball_mass,
        }));
    }
    Ok(Report {
        status,
        result: json!({ "beta0": target, "r": p.r, "rhos": rhos, "n_level": n_level, "tolerance": tol, "points": per_point, "max_slope_error": worst }),
        table,
        headline: vec![("max_slope_error".into(), worst)],
    })
}

// ---------------------------------------------------------------- whitney

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhitneyParams {
    ball: Option<Ball>,
    #[serde(default = "eight")]
    max_level: i32,
    #[serde(default = "probes")]
    n_probe: usize,
    #[serde(default = "two")]
    t: f64,
    #[serde(default = "pairs")]
    lipschitz_pairs: usize,
}

fn eight() -> i32 {
    8
}
fn probes() -> usize {
    5000
}
fn two() -> f64 {
    2.0
}
fn pairs() -> usize {
    2000
}

fn whitney(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: WhitneyParams = cfg.params()?;
    let ball = p.ball.unwrap_or_else(|| cfg_spec(cfg).ambient_ball());
    let cover = cache.cover(cfg, ball, p.max_level)?;
    let mut seeds = SeedSequence::new(cfg.seed);
    let overlap = overlap_stat(&cover, p.t, p.n_probe, seeds.next_seed())?;
    let lip = if p.lipschitz_pairs > 0 {
        Some(partition_lipschitz_stat(&cover, p.lipschitz_pairs, seeds.next_seed())?)
    } else {
        None
    };
    let mut rng = stream(seeds.next_seed(), 0);
    let mut sum_error: f64 = 0.0;
    for _ in 0..p.n_probe {
        let x = cover.random_valid_point(&mut rng);
        sum_error = sum_error.max((cover.partition_eval(x)?.sum() - 1.0).abs());
    }
    let disjoint = cover.check_disjoint();
    let mut table = Table::new(&["i", "j", "x", "y", "r"]);
    for c in cover.rows() {
        table.push(vec![c.i.to_string(), c.j.to_string(), num(c.x), num(c.y), num(c.r)]);
    }
    Ok(Report {
        status: Status::Converged,
        result: json!({
            "ball": ball,
            "max_level": p.max_level,
            "cells": cover.len(),
            "resolution": cover.resolution(),
            "disjoint": disjoint,
            "overlap": overlap,
            "partition_sum_error": sum_error,
            "partition_lipschitz": lip,
        }),
        table,
        headline: vec![
            ("cells".into(), cover.len() as f64),
            ("n1".into(), overlap.n1 as f64),
            ("partition_sum_error".into(), sum_error),
        ],
    })
}

fn cfg_spec(cfg: &ExperimentConfig) -> fractal_trace::FractalSpec {
    fractal_trace::FractalSpec::from_kind(cfg.fractal)
}

// ---------------------------------------------------------------- extension

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionParams {
    #[serde(default = "coordinate")]
    function: String,
    #[serde(default = "extension_samples")]
    n_samples: usize,
    #[serde(default = "eight")]
    max_level: i32,
    ball: Option<Ball>,
    #[serde(default = "thousand")]
    n_points: usize,
    #[serde(default)]
    lipschitz_pairs: usize,
}

fn coordinate() -> String {
    "coordinate".into()
}
fn extension_samples() -> usize {
    20_000
}

fn extension(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: ExtensionParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let u = test_function(&f, &p.function)?;
    let ball = p.ball.unwrap_or_else(|| cfg_spec(cfg).ambient_ball());
    let cover = cache.cover(cfg, ball, p.max_level)?;
    let mut seeds = SeedSequence::new(cfg.seed);
    let samples = cache.samples(cfg, p.n_samples, seeds.next_seed())?;
    let su = Extension::new(&cover, &samples, &u.boundary())?;
    let mut rng = stream(seeds.next_seed(), 0);
    let mut table = Table::new(&["x", "y", "dist", "value", "grad_x", "grad_y", "u"]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..p.n_points {
        let x = cover.random_valid_point(&mut rng);
        let v = su.eval(x)?;
        let g = su.exact_gradient(x)?;
        lo = lo.min(v);
        hi = hi.max(v);
        table.push(vec![num(x.x), num(x.y), num(f.distance(x)), num(v), num(g.x), num(g.y), num(u.value(x))]);
    }
    let lip = if p.lipschitz_pairs > 0 {
        Some(lipschitz_estimate(&su, PairDomain::Whitney(&cover), p.lipschitz_pairs, seeds.next_seed()))
    } else {
        None
    };
    let mut headline = vec![("min".into(), lo), ("max".into(), hi)];
    if let Some(l) = lip {
        headline.push(("lipschitz".into(), l));
    }
    Ok(Report {
        status: Status::Converged,
        result: json!({
            "function": p.function,
            "ball": ball,
            "cells": cover.len(),
            "resolution": cover.resolution(),
            "n_samples": samples.len(),
            "n_points": p.n_points,
            "min": lo,
            "max": hi,
            "lipschitz": lip,
        }),
        table,
        headline,
    })
}

// ---------------------------------------------------------------- trace

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceParams {
    #[serde(default = "coordinate")]
    function: String,
    points: Option<Vec<[f64; 2]>>,
    #[serde(default = "twenty")]
    n_points: usize,
    #[serde(default = "codim_exponents")]
    radius_exponents: [i32; 2],
    /// Take the trace of the extension of `function` instead of the function.
    #[serde(default)]
    of_extension: bool,
    #[serde(default = "extension_samples")]
    n_samples: usize,
    #[serde(default = "eight")]
    max_level: i32,
}

fn trace_op(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: TraceParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let u = test_function(&f, &p.function)?;
    let schedule = radii_from(p.radius_exponents)?;
    let tol = cfg.tol_or(TRACE_TOL);
    let points = boundary_points(cfg, cache, p.points, p.n_points, 1)?;
    let (cover, samples);
    let su;
    let target: &dyn AmbientFunction = if p.of_extension {
        cover = cache.cover(cfg, cfg_spec(cfg).ambient_ball(), p.max_level)?;
        samples = cache.samples(cfg, p.n_samples, fractal_trace::rng::split(cfg.seed, 2))?;
        su = Extension::new(&cover, &samples, &u.boundary())?;
        &su
    } else {
        &u
    };
    let mut table = Table::new(&["point", "x", "y", "radius", "average"]);
    let mut status = Status::Converged;
    let mut per_point = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let t = trace(&f, target, *x, &schedule, cfg.weights.alpha, tol)?;
        status = status.worst(t.status);
        for (r, v) in t.radii.iter().zip(&t.values) {
            table.push(vec![k.to_string(), num(x.x), num(x.y), num(*r), num(*v)]);
        }
        let exact = u.value(*x);
        worst = worst.max((t.limit - exact).abs());
        per_point.push(json!({ "x": x.x, "y": x.y, "u": exact, "limit": t.limit, "stabilized": t.stabilized }));
    }
    Ok(Report {
        status,
        result: json!({
            "function": p.function,
            "of_extension": p.of_extension,
            "schedule": schedule,
            "tolerance": tol,
            "points": per_point,
            "max_error": worst,
        }),
        table,
        headline: vec![("max_error".into(), worst)],
    })
}

// ---------------------------------------------------------------- maximal

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaximalParams {
    /// Rectangles `[x0, y0, x1, y1]` whose indicators are the inputs.
    inputs: Option<Vec<[f64; 4]>>,
    #[serde(default = "t_grid")]
    t_grid: Vec<f64>,
    #[serde(default = "two_thousand")]
    n_samples: usize,
    radii: Option<Vec<f64>>,
}

fn t_grid() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2, 0.4]
}
fn two_thousand() -> usize {
    2000
}

fn default_inputs(kind: FractalKind) -> Vec<[f64; 4]> {
    let h = SQRT3 / 2.0;
    match kind {
        FractalKind::Carpet => vec![[0.3, 0.3, 0.4, 0.4], [0.0, 0.0, 0.2, 0.1], [0.45, 0.45, 0.55, 0.55]],
        _ => vec![[0.4, 0.2, 0.6, 0.35], [0.0, 0.0, 0.2, 0.1], [0.45, 0.5 * h, 0.55, 0.6 * h]],
    }
}

fn maximal(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: MaximalParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let w = cfg.weight_params()?;
    let inputs: Vec<Rect> = p
        .inputs
        .unwrap_or_else(|| default_inputs(cfg.fractal))
        .into_iter()
        .map(|[x0, y0, x1, y1]| {
            if x0 < x1 && y0 < y1 {
                Ok(Rect { min: Point2::new(x0, y0), max: Point2::new(x1, y1) })
            } else {
                Err(CliError::Invalid(format!("degenerate rectangle [{x0}, {y0}, {x1}, {y1}]")))
            }
        })
        .collect::<Result<_, _>>()?;
    if inputs.is_empty() || p.t_grid.is_empty() {
        return Err(CliError::Invalid("maximal needs inputs and thresholds".into()));
    }
    let radii = p.radii.unwrap_or_else(default_radii);
    let tol = cfg.tol_or(SURVEY_TOL);
    let samples = cache.samples(cfg, p.n_samples, fractal_trace::rng::split(cfg.seed, 0))?;
    let r = weak_type_experiment(&f, &samples, &inputs, w.gamma, w.alpha, &p.t_grid, &radii, tol)?;
    let mut table = Table::new(&["input", "t", "level_set", "integral", "ratio"]);
    for row in &r.rows {
        table.push(vec![row.input.to_string(), num(row.t), num(row.level_set), num(row.integral), num(row.ratio)]);
    }
    Ok(Report {
        status: r.status,
        result: json!({
            "gamma": w.gamma,
            "inputs": inputs.iter().map(|r| [r.min.x, r.min.y, r.max.x, r.max.y]).collect::<Vec<_>>(),
            "t_grid": p.t_grid,
            "radii": radii,
            "n_samples": samples.len(),
            "tolerance": tol,
            "constant": r.constant,
        }),
        table,
        headline: vec![("constant".into(), r.constant)],
    })
}

// ---------------------------------------------------------------- ratio

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Experiment {
    Trace,
    Extension,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatioParams {
    experiment: Experiment,
    n_samples: Option<usize>,
    n_extension_samples: Option<usize>,
    seeds: Option<Vec<u64>>,
    #[serde(default = "three")]
    n_seeds: usize,
    nu_level: Option<u32>,
    dyadic_levels: Option<u32>,
    node_size: Option<f64>,
    #[serde(default = "eight")]
    max_level: i32,
    functions: Option<Vec<String>>,
    #[serde(default)]
    allow_inadmissible: bool,
}

fn three() -> usize {
    3
}

fn ratio(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report, CliError> {
    let p: RatioParams = cfg.params()?;
    let f = cache.fractal(cfg)?;
    let w = cfg.weight_params()?;
    let admissible = match p.experiment {
        Experiment::Trace => trace_admissible(&w),
        Experiment::Extension => extension_admissible(&w),
    };
    if !admissible && !p.allow_inadmissible {
        return Err(CliError::Invalid(format!(
            "weights (α={}, p={}, θ={}) violate the {} hypotheses; set allow_inadmissible to run anyway",
            w.alpha,
            w.p,
            w.theta,
            if p.experiment == Experiment::Trace { "trace" } else { "extension" }
        )));
    }
    let d = RatioSettings::default();
    let seeds = match p.seeds {
        Some(s) if s.is_empty() => return Err(CliError::Invalid("`seeds` is empty".into())),
        Some(s) => s,
        None => {
            let mut seq = SeedSequence::new(cfg.seed);
            (0..p.n_seeds.max(1)).map(|_| seq.next_seed()).collect()
        }
    };
    let settings = RatioSettings {
        n_samples: p.n_samples.unwrap_or(d.n_samples),
        n_extension_samples: p.n_extension_samples.unwrap_or(d.n_extension_samples),
        seeds,
        nu_level: p.nu_level.unwrap_or(d.nu_level),
        dyadic_levels: p.dyadic_levels.unwrap_or(d.dyadic_levels),
        node_size: p.node_size.unwrap_or(d.node_size),
        tol: cfg.tol_or(d.tol),
    };
    if settings.n_samples == 0 || settings.n_samples > settings.n_extension_samples && p.experiment == Experiment::Extension {
        return Err(CliError::Invalid("need 0 < n_samples ≤ n_extension_samples".into()));
    }
    let family: Vec<TestFunction> = match &p.functions {
        None => TestFunction::family(&f),
        Some(names) => names.iter().map(|n| test_function(&f, n)).collect::<Result<_, _>>()?,
    };
    let ball = cfg_spec(cfg).ambient_ball();
    let reports: Vec<RatioReport> = match p.experiment {
        Experiment::Trace => vec![trace_ratio_experiment(&f, w, &ball, &family, &settings)?],
        Experiment::Extension => {
            let cover = cache.cover(cfg, ball, p.max_level)?;
            let (g, m) = extension_ratio_experiment(&f, w, &cover, &family, &settings)?;
            vec![g, m]
        }
    };
    let mut table = Table::new(&["report", "function", "seed", "numerator", "denominator", "ratio"]);
    let mut spread: f64 = 1.0;
    let mut all_stable = true;
    let mut per_function = Vec::new();
    for r in &reports {
        for row in &r.rows {
            table.push(vec![r.name.clone(), row.function.clone(), row.seed.to_string(), num(row.numerator), num(row.denominator), opt(row.ratio)]);
        }
        for s in &r.summaries {
            if let (Some(lo), Some(hi)) = (s.min, s.max) {
                spread = spread.max(hi / lo);
                per_function.push((format!("{}:{}", r.name, s.function), hi));
            }
            all_stable &= s.stable.unwrap_or(true);
        }
    }
    let summaries: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "name": r.name, "besov_form": r.besov_form, "summaries": r.summaries }))
        .collect();
    Ok(Report {
        status: Status::Converged,
        result: json!({
            "admissible": admissible,
            "settings": settings,
            "reports": summaries,
            "max_spread": spread,
            "stable": all_stable,
        }),
        table,
        headline: [("max_spread".into(), spread), ("stable".into(), if all_stable { 1.0 } else { 0.0 })]
            .into_iter()
            .chain(per_function)
            .collect(),
    })
}
