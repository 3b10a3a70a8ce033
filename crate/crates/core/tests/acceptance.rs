//! Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
//! stderr. Exits nonzero when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fractal_trace::energies::{
    extension_ratio_experiment, lipschitz_estimate, trace_ratio_experiment, PairDomain, RatioReport,
    RatioSettings, TestFunction,
};
use fractal_trace::geometry::KochCurve;
use fractal_trace::measures::{
    boundary_sample, c_alpha, carpet_cell_measure, gasket_triangle_measure, hole_measure_carpet,
    hole_measure_gasket, mu_alpha_region, DEFAULT_BUDGET,
};
use fractal_trace::operators::{
    default_radii, fractional_maximal, trace, weak_type_experiment, BoundaryFunction, Extension, MaximalInput,
};
use fractal_trace::regularity::{
    ap_product, ap_survey, beta0, codimension_profile, doubling_survey, oscillation, sample_square, shell_profile,
};
use fractal_trace::whitney::{build_whitney, overlap_stat, WhitneyCover};
use fractal_trace::geometry::Rect;
use fractal_trace::{Fractal, Point2, Region, Square, Status, WeightParams};

const SQRT3: f64 = fractal_trace::geometry::SQRT3;
const SUITE_LIMIT: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Adds a failure reason to `why` unless `ok`.
fn check(why: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        why.push(msg());
    }
}

fn finish(why: Vec<String>, summary: String) -> Outcome {
    if why.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("{summary}; {}", why.join("; ")))
    }
}

/// Generation-`k` hole in the lower-left corner cell.
fn corner_hole(k: u32) -> Square {
    let s = 3f64.powi(-(k as i32));
    Square::from_corner(s, s, s)
}

fn criterion_1() -> Outcome {
    let f = Fractal::carpet();
    let start = Instant::now();
    let mut why = Vec::new();
    let mut widest: f64 = 0.0;
    for k in 1..=3 {
        let region = Region::Square(corner_hole(k));
        for alpha in [0.0, 0.5, 1.0, -0.05] {
            let exact = hole_measure_carpet(k, alpha).value();
            let m = mu_alpha_region(&f, &region, alpha, 1e-4, DEFAULT_BUDGET).unwrap();
            widest = widest.max(m.value.width() / exact);
            check(&mut why, m.status() == Status::Converged && m.value.contains(exact), || {
                format!("k={k} α={alpha}: {:?} misses {exact}", m.value)
            });
        }
        for alpha in [-1.0, -1.5] {
            let m = mu_alpha_region(&f, &region, alpha, 1e-4, DEFAULT_BUDGET).unwrap();
            check(&mut why, m.status() == Status::Divergent, || format!("k={k} α={alpha}: status {:?}", m.status()));
        }
    }
    let t = start.elapsed();
    check(&mut why, t < Duration::from_secs(30), || format!("took {t:?}"));
    finish(why, format!("12 brackets (widest rel. width {widest:.1e}), 6 divergences, {:.1}s", t.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let f = Fractal::carpet();
    let unit = Region::Square(Square::from_corner(0.0, 0.0, 1.0));
    let mut why = Vec::new();
    for alpha in [0.0, 0.5, 1.0] {
        let exact = carpet_cell_measure(1.0, alpha).value();
        let q = 8.0 * 3f64.powf(-(alpha + 2.0));
        let first = c_alpha(alpha) * 3f64.powf(-(alpha + 2.0));
        let series: f64 = (0..40).map(|j| first * q.powi(j)).sum();
        let tail = first * q.powi(40) / (1.0 - q);
        check(&mut why, exact - series >= -1e-14 * exact && exact - series <= tail + 1e-14 * exact, || {
            format!("α={alpha}: series {series} vs {exact} (tail {tail:.2e})")
        });
        let m = mu_alpha_region(&f, &unit, alpha, 1e-3, DEFAULT_BUDGET).unwrap();
        check(&mut why, m.value.contains(exact) || (m.value.mid() - exact).abs() <= 1e-3 * exact, || {
            format!("α={alpha}: quadrature {:?} vs {exact}", m.value)
        });
    }
    let one = carpet_cell_measure(1.0, 0.0).value();
    check(&mut why, one == 1.0, || format!("α=0 value {one}"));
    finish(why, "series, tail bound and quadrature agree for α ∈ {0, 0.5, 1}; α=0 gives exactly 1".into())
}

fn criterion_3() -> Outcome {
    let mut why = Vec::new();
    let area = SQRT3 / 4.0;
    let hole = hole_measure_gasket(1.0, 0.0).value();
    check(&mut why, (hole - area).abs() <= 1e-12, || format!("hole {hole}"));
    // The triangle is its central hole plus three half-size triangles.
    // (3/4)^100 puts the truncated tail far below the tolerance.
    let series: f64 = (0..100).map(|j| 3f64.powi(j) * hole_measure_gasket(2f64.powi(-j - 1), 0.0).value()).sum();
    check(&mut why, (series - area).abs() <= 1e-6, || format!("series {series}"));
    let summed = gasket_triangle_measure(0, 0.0).value();
    check(&mut why, (summed - area).abs() <= 1e-6, || format!("summed series {summed}"));
    let critical = 3f64.ln() / 2f64.ln() - 2.0;
    check(&mut why, gasket_triangle_measure(0, critical).is_divergent(), || "not flagged divergent".into());
    let f = Fractal::gasket();
    let tri = Region::Square(Square::from_corner(0.0, 0.0, 1.0));
    let m = mu_alpha_region(&f, &tri, critical - 0.2, 1e-3, DEFAULT_BUDGET).unwrap();
    check(&mut why, m.status() == Status::Divergent, || format!("quadrature below threshold: {:?}", m.status()));
    finish(why, format!("hole {hole:.15}, series {series:.12}, divergence flagged at α = {critical:.4}"))
}

fn criterion_4() -> Outcome {
    let f = Fractal::carpet();
    let mut why = Vec::new();
    let tol = 1e-2;
    let r = doubling_survey(&f, -0.05, 1000, 1, tol).unwrap();
    check(&mut why, r.max_ratio.is_finite() && r.stable, || {
        format!("max {} → {} when doubled", r.max_ratio, r.max_ratio_doubled)
    });
    let flat = doubling_survey(&f, 0.0, 1000, 1, tol).unwrap();
    let worst = flat.samples.iter().map(|s| (s.ratio - 9.0).abs() / 9.0).fold(0.0, f64::max);
    check(&mut why, worst <= 2.0 * tol, || format!("α=0 deviation {worst:.2e}"));
    finish(
        why,
        format!(
            "max ratio {:.3} (doubled {:.3}); α=0 off 9 by ≤ {worst:.1e}",
            r.max_ratio, r.max_ratio_doubled
        ),
    )
}

fn criterion_5() -> Outcome {
    let f = Fractal::carpet();
    let mut why = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let s = sample_square(f.spec(), 5, i);
        let v = ap_product(&f, &s, 0.0, 2.0, 1e-4).unwrap();
        worst = worst.max((v.mid() - 1.0).abs());
    }
    check(&mut why, worst <= 1e-6, || format!("α=0 products off 1 by {worst:.2e}"));
    let r = ap_survey(&f, -0.05, 2.0, 1000, 1, 1e-2).unwrap();
    check(&mut why, r.max_ratio.is_finite() && r.stable, || {
        format!("sup {} → {} when doubled", r.max_ratio, r.max_ratio_doubled)
    });
    // Outside the window the sup is expected to keep growing with the sample;
    // reported, not asserted.
    let small = ap_survey(&f, 0.5, 2.0, 100, 1, 1e-2).unwrap();
    let large = ap_survey(&f, 0.5, 2.0, 1000, 1, 1e-2).unwrap();
    eprintln!(
        "  [5, informational] α=0.5 outside the window: sup {:.3} (n=100) → {:.3} (n=1000), growth ×{:.2}",
        small.max_ratio,
        large.max_ratio,
        large.max_ratio / small.max_ratio
    );
    finish(why, format!("α=0 products within {worst:.1e}; sup {:.3} (doubled {:.3})", r.max_ratio, r.max_ratio_doubled))
}

fn criterion_6() -> Outcome {
    let f = Fractal::carpet();
    let start = Instant::now();
    let radii: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let points = boundary_sample(f.spec(), 100, 6);
    let mut why = Vec::new();
    let mut worst: f64 = 0.0;
    for s in &points.points {
        let profile = codimension_profile(&f, -0.05, s.point, &radii, 1e-2).unwrap();
        let osc = oscillation(&profile);
        worst = worst.max(osc);
        check(&mut why, osc <= 100.0, || format!("{:?}: oscillation {osc}", s.point));
    }
    let t = start.elapsed();
    check(&mut why, t < Duration::from_secs(120), || format!("took {t:?}"));
    finish(why, format!("worst max/min {worst:.3} over 100 points, {:.1}s", t.as_secs_f64()))
}

fn criterion_7() -> Outcome {
    let curve = KochCurve::new(7).unwrap();
    let v = curve.vertices();
    let rhos: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let target = beta0();
    let mut why = Vec::new();
    let mut slopes = Vec::new();
    for idx in [0usize, 1000, 5000, 20000, 40000] {
        let x = v[idx % v.len()];
        let p = shell_profile(x, 0.5, &rhos, 7, 0.1).unwrap();
        slopes.push(p.fitted_slope);
        check(&mut why, (p.fitted_slope - target).abs() <= 0.08, || {
            format!("{x:?}: slope {}", p.fitted_slope)
        });
    }
    let list: Vec<String> = slopes.iter().map(|s| format!("{s:.4}")).collect();
    finish(why, format!("slopes [{}] vs β₀ = {target:.4}", list.join(", ")))
}

fn criterion_8() -> Outcome {
    let f = Fractal::carpet();
    let cover = build_whitney(&f, f.spec().ambient_ball(), 8).unwrap();
    let mut why = Vec::new();
    let mut rng = fractal_trace::rng::stream(8, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x = cover.random_valid_point(&mut rng);
        let s = cover.partition_eval(x).unwrap().sum();
        worst = worst.max((s - 1.0).abs());
    }
    check(&mut why, worst <= 1e-9, || format!("partition sum off by {worst:.2e}"));
    check(&mut why, cover.check_disjoint(), || "generating squares overlap".into());
    let a = overlap_stat(&cover, 1.0, 5000, 8).unwrap();
    let b = overlap_stat(&cover, 1.0, 10_000, 8).unwrap();
    check(&mut why, a.n1 == b.n1, || format!("N₁ {} → {} when probes double", a.n1, b.n1));
    finish(
        why,
        format!("{} cells, sums within {worst:.1e}, disjoint, N₁ = {} at 5000 and 10000 probes", cover.len(), b.n1),
    )
}

fn carpet_cover() -> (Fractal, WhitneyCover) {
    let f = Fractal::carpet();
    let cover = build_whitney(&f, f.spec().ambient_ball(), 8).unwrap();
    (f, cover)
}

fn criterion_9() -> Outcome {
    let (f, cover) = carpet_cover();
    let mut why = Vec::new();
    let n = 100_000;
    let mut rng = fractal_trace::rng::stream(9, 0);

    let samples = boundary_sample(f.spec(), n, 1);
    let c = BoundaryFunction::rule(|_| 2.5, Some(0.0));
    let sc = Extension::new(&cover, &samples, &c).unwrap();
    let mut worst_const: f64 = 0.0;
    for _ in 0..1000 {
        let x = cover.random_valid_point(&mut rng);
        worst_const = worst_const.max((sc.eval(x).unwrap() - 2.5).abs());
    }
    check(&mut why, worst_const <= 1e-12, || format!("constant off by {worst_const:.2e}"));

    let u = TestFunction::Coordinate.boundary();
    let mut lips = Vec::new();
    for seed in [1u64, 2, 3] {
        let s = boundary_sample(f.spec(), n, seed);
        let su = Extension::new(&cover, &s, &u).unwrap();
        lips.push(lipschitz_estimate(&su, PairDomain::Whitney(&cover), 20_000, seed));
    }
    let (lo, hi) = (lips.iter().copied().fold(f64::INFINITY, f64::min), lips.iter().copied().fold(0.0, f64::max));
    check(&mut why, hi <= 50.0, || format!("Lip(Su) up to {hi}"));
    check(&mut why, hi <= 1.10 * lo, || format!("Lip(Su) spread {lo}..{hi}"));

    // Su below the resolution takes nearest-sample values, so the trace at
    // radius r is within r + dist(x, samples) of u(x) on top of C·r.
    let su = Extension::new(&cover, &samples, &u).unwrap();
    let index = fractal_trace::operators::SampleIndex::new(samples.positions());
    let r = 2f64.powi(-10);
    let schedule: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let probes = boundary_sample(f.spec(), 20, 99);
    let mut worst_excess: f64 = 0.0;
    for p in &probes.points {
        let x = p.point;
        let tr = trace(&f, &su, x, &schedule, -0.05, 1e-3).unwrap();
        let value = *tr.values.last().unwrap();
        let sampling = r + x.dist(samples.points[index.nearest(x).unwrap()].point);
        let bound = lips[0] * r + sampling;
        let err = (value - x.x).abs();
        worst_excess = worst_excess.max(err / bound);
        check(&mut why, err <= bound, || format!("trace at {x:?}: error {err:.2e} > {bound:.2e}"));
    }
    finish(
        why,
        format!(
            "constant within {worst_const:.1e}; Lip(Su) {:.3}/{:.3}/{:.3}; trace error ≤ {:.0}% of bound at 20 points",
            lips[0],
            lips[1],
            lips[2],
            100.0 * worst_excess
        ),
    )
}

/// Every nonconstant row finite, summaries stable; constants give `0/0`.
fn check_ratios(why: &mut Vec<String>, report: &RatioReport, constant_degenerate: bool) -> String {
    for s in &report.summaries {
        if s.function == "constant" && constant_degenerate {
            let rows = report.rows.iter().filter(|r| r.function == "constant");
            for r in rows {
                check(why, r.denominator == 0.0 && r.numerator.abs() <= 1e-12, || {
                    format!("{}: constant gives {}/{}", report.name, r.numerator, r.denominator)
                });
            }
            continue;
        }
        check(why, s.stable == Some(true), || {
            format!("{} {}: ratios {:?}..{:?}", report.name, s.function, s.min, s.max)
        });
    }
    let spans: Vec<String> = report
        .summaries
        .iter()
        .filter_map(|s| Some(format!("{} {:.3}–{:.3}", s.function, s.min?, s.max?)))
        .collect();
    format!("{}: {}", report.name, spans.join(", "))
}

fn criterion_10() -> Outcome {
    let (f, cover) = carpet_cover();
    let family = TestFunction::family(&f);
    let settings = RatioSettings::default();
    let mut why = Vec::new();
    let trace_params = WeightParams::new(f.spec(), -0.05, 2.0, 0.4, 1.5).unwrap();
    let ext_params = WeightParams::new(f.spec(), -0.05, 2.0, 0.98, 1.5).unwrap();
    check(&mut why, fractal_trace::regularity::trace_admissible(&trace_params), || "θ=0.4 not trace-admissible".into());
    check(&mut why, fractal_trace::regularity::extension_admissible(&ext_params), || {
        "θ=0.98 not extension-admissible".into()
    });
    let tr = trace_ratio_experiment(&f, trace_params, &cover.ball, &family, &settings).unwrap();
    let (grad, mass) = extension_ratio_experiment(&f, ext_params, &cover, &family, &settings).unwrap();
    let a = check_ratios(&mut why, &tr, true);
    let b = check_ratios(&mut why, &grad, true);
    let c = check_ratios(&mut why, &mass, false);
    finish(why, format!("{a} | {b} | {c}"))
}

fn criterion_11() -> Outcome {
    let f = Fractal::carpet();
    let params = WeightParams::new(f.spec(), -0.05, 2.0, 0.4, 1.5).unwrap();
    let mut why = Vec::new();
    let samples = boundary_sample(f.spec(), 2000, 11);
    let inputs = [
        Rect { min: Point2::new(0.3, 0.3), max: Point2::new(0.4, 0.4) },
        Rect { min: Point2::new(0.0, 0.0), max: Point2::new(0.2, 0.1) },
        Rect { min: Point2::new(0.45, 0.45), max: Point2::new(0.55, 0.55) },
    ];
    let t_grid = [0.02, 0.05, 0.1, 0.2, 0.4];
    let radii = default_radii();
    let r = weak_type_experiment(&f, &samples, &inputs, params.gamma, params.alpha, &t_grid, &radii, 1e-2).unwrap();
    check(&mut why, r.constant.is_finite() && r.constant > 0.0, || format!("constant {}", r.constant));
    for row in &r.rows {
        check(&mut why, row.level_set <= r.constant / row.t * row.integral * (1.0 + 1e-12), || {
            format!("input {} t={}: {} exceeds C/t·∫h", row.input, row.t, row.level_set)
        });
    }
    for x in [Point2::new(0.0, 0.0), Point2::new(0.5, 0.5), Point2::new(1.0 / 3.0, 0.2)] {
        let v = fractional_maximal(&f, MaximalInput::Constant(1.0), params.gamma, x, &radii, params.alpha, 1e-2).unwrap();
        check(&mut why, v.value == 1.0, || format!("M_γ1({x:?}) = {}", v.value));
    }
    finish(why, format!("single C = {:.3} over {} rows; M_γ1 ≡ 1", r.constant, r.rows.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact hole measures", criterion_1),
        ("carpet series", criterion_2),
        ("gasket", criterion_3),
        ("doubling", criterion_4),
        ("A_p", criterion_5),
        ("codimension", criterion_6),
        ("Koch shell exponent", criterion_7),
        ("Whitney cover", criterion_8),
        ("extension operator", criterion_9),
        ("norm inequalities", criterion_10),
        ("maximal function", criterion_11),
    ];
    // Criterion 10 also bounds the runtime of the whole suite, so it runs
    // last; lines are still printed in order.
    let order = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 9];
    let start = Instant::now();
    let mut lines = vec![String::new(); criteria.len()];
    let mut failed = 0;
    for i in order {
        let (name, run) = criteria[i];
        eprintln!("running criterion {} ({name})", i + 1);
        let t = Instant::now();
        let mut out = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if i == 9 {
            let total = start.elapsed();
            out.detail.push_str(&format!("; full suite {:.1}s", total.as_secs_f64()));
            if total > SUITE_LIMIT {
                out.pass = false;
            }
        }
        if !out.pass {
            failed += 1;
        }
        lines[i] = format!(
            "{} [{:>2}] {name} ({:.1}s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64(),
            out.detail
        );
        eprintln!("  {}", lines[i]);
    }
    for line in &lines {
        println!("{line}");
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
