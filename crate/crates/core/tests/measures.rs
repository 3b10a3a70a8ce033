use fractal_trace::measures::{
    boundary_sample, carpet_cell_measure, hole_measure_carpet, mu_alpha_mc_oracle, mu_alpha_region, nu_ball,
    DEFAULT_BUDGET,
};
use fractal_trace::{Ball, Fractal, FractalSpec, Point2, Region, Square, Status};
use proptest::prelude::*;

fn carpet() -> Fractal {
    Fractal::carpet()
}

#[test]
fn closed_form_values() {
    // c_α = 8/((α+1)(α+2))·(1/2)^{α+2}; at α=0 the hole is its own area.
    assert!((hole_measure_carpet(1, 0.0).value() - 1.0 / 9.0).abs() < 1e-16);
    assert!((hole_measure_carpet(2, 1.0).value() - 8.0 / 6.0 / 8.0 * 3f64.powi(-6)).abs() < 1e-18);
    assert_eq!(carpet_cell_measure(1.0, 0.0).value(), 1.0);
    assert!(hole_measure_carpet(1, -1.0).is_divergent());
}

#[test]
fn mc_oracle_agrees_with_quadrature() {
    // The MC variance is finite only for 2α > Q − 2 and its standard error
    // is unreliable close to that, so stay well inside.
    let f = carpet();
    let regions = [
        (Region::Square(Square::from_corner(0.3, 0.3, 0.4)), 0.1),
        (Region::Ball(Ball::new(Point2::new(1.0 / 3.0, 0.5), 0.2)), 0.25),
        (Region::Square(Square::from_corner(-0.2, 0.1, 0.5)), 0.5),
        (Region::Ball(Ball::new(Point2::new(0.0, 0.0), 0.3)), 1.0),
    ];
    for (k, (region, alpha)) in regions.iter().enumerate() {
        let q = mu_alpha_region(&f, region, *alpha, 1e-3, DEFAULT_BUDGET).unwrap();
        assert_eq!(q.status(), Status::Converged, "{region:?} at α={alpha}: {:?}", q.value);
        let (mean, se) = mu_alpha_mc_oracle(&f, region, *alpha, 200_000, k as u64);
        assert!(q.value.hi >= mean - 3.0 * se && q.value.lo <= mean + 3.0 * se, "{region:?}: {:?} vs {mean} ± {se}", q.value);
    }
}

#[test]
fn nu_ball_matches_sample_frequencies() {
    let spec = FractalSpec::carpet();
    let samples = boundary_sample(&spec, 40_000, 5);
    for (c, r) in [((0.0, 0.0), 0.3), ((0.5, 1.0 / 3.0), 0.1), ((0.9, 0.2), 0.05)] {
        let c = Point2::new(c.0, c.1);
        let exact = nu_ball(&spec, c, r, 10);
        let hits = samples.points.iter().filter(|s| s.point.dist(c) < r).count() as f64 / samples.len() as f64;
        let se = (exact * (1.0 - exact) / samples.len() as f64).sqrt();
        assert!((hits - exact).abs() <= 4.0 * se + 1e-3, "{c:?}: {hits} vs {exact}");
    }
}

fn square_in_unit() -> impl Strategy<Value = Square> {
    (0.0f64..0.8, 0.0f64..0.8, 0.02f64..0.2).prop_map(|(x, y, s)| Square::from_corner(x, y, s.min(1.0 - x).min(1.0 - y)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn alpha_zero_is_area(x in -2.0f64..2.0, y in -2.0f64..2.0, s in 1e-3f64..3.0, gasket in any::<bool>()) {
        let f = if gasket { Fractal::gasket() } else { carpet() };
        let sq = Square::from_corner(x, y, s);
        let m = mu_alpha_region(&f, &Region::Square(sq), 0.0, 1e-6, DEFAULT_BUDGET).unwrap();
        prop_assert!((m.value.mid() - sq.area()).abs() <= 1e-6 * sq.area());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hole_scaling_law(k in 1u32..8, alpha in -0.9f64..3.0) {
        let r = hole_measure_carpet(k + 1, alpha).value() / hole_measure_carpet(k, alpha).value();
        prop_assert!((r / 3f64.powf(-(alpha + 2.0)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quadrature_scales_under_the_similarities(sq in square_in_unit(), alpha in -0.08f64..1.0, cell in 0usize..8) {
        // μ_α(w(S)) = 3^{-(2+α)} μ_α(S) for S in the unit square.
        let f = carpet();
        let (i, j) = fractal_trace::geometry::carpet::SUBCELLS[cell];
        let c = sq.center;
        let image = Square::new(Point2::new((c.x + i as f64) / 3.0, (c.y + j as f64) / 3.0), sq.side / 3.0);
        let a = mu_alpha_region(&f, &Region::Square(sq), alpha, 1e-3, DEFAULT_BUDGET).unwrap().value;
        let b = mu_alpha_region(&f, &Region::Square(image), alpha, 1e-3, DEFAULT_BUDGET).unwrap().value;
        let s = 3f64.powf(-(2.0 + alpha));
        prop_assert!(b.lo <= a.hi * s * (1.0 + 1e-12) && a.lo * s <= b.hi * (1.0 + 1e-12), "{a:?} scaled vs {b:?}");
    }

    #[test]
    fn measure_is_monotone_in_the_region(x in -0.5f64..1.0, y in -0.5f64..1.0, r in 0.05f64..0.5, alpha in -0.08f64..1.0) {
        let f = carpet();
        let c = Point2::new(x, y);
        let small = mu_alpha_region(&f, &Region::Ball(Ball::new(c, r)), alpha, 1e-3, DEFAULT_BUDGET).unwrap().value;
        let big = mu_alpha_region(&f, &Region::Ball(Ball::new(c, 1.5 * r)), alpha, 1e-3, DEFAULT_BUDGET).unwrap().value;
        prop_assert!(small.lo <= big.hi);
    }
}
