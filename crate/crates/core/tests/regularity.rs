use fractal_trace::geometry::KochCurve;
use fractal_trace::measures::{mu_alpha_region, WeightParams};
use fractal_trace::regularity::{
    ap_product, codimension_profile, extension_admissible, sample_square, shell_profile, trace_admissible, SURVEY_BUDGET,
};
use fractal_trace::{Fractal, FractalSpec, Point2, Region, Square, Status};
use proptest::prelude::*;

const TOL: f64 = 1e-2;

fn measure(f: &Fractal, s: &Square, alpha: f64) -> f64 {
    let m = mu_alpha_region(f, &Region::Square(*s), alpha, TOL, SURVEY_BUDGET).unwrap();
    assert_eq!(m.status(), Status::Converged);
    m.value.mid()
}

#[test]
fn ap_sup_is_stable_under_tripling() {
    // With D the largest doubling ratio seen for ω and for the dual weight,
    // the A_p products of S and 3S differ by at most D³ either way.
    let f = Fractal::carpet();
    let (alpha, p) = (-0.05, 2.0);
    let dual = -alpha / (p - 1.0);
    let (mut sup_s, mut sup_3s, mut d) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..40 {
        let s = sample_square(f.spec(), 9, i);
        let big = s.scaled(3.0);
        for a in [alpha, dual] {
            d = d.max(measure(&f, &big, a) / measure(&f, &s, a));
        }
        sup_s = sup_s.max(ap_product(&f, &s, alpha, p, TOL).unwrap().mid());
        sup_3s = sup_3s.max(ap_product(&f, &big, alpha, p, TOL).unwrap().mid());
    }
    assert!(d.is_finite() && d >= 9.0 * (1.0 - TOL), "doubling constant {d}");
    let k = d.powi(3);
    assert!(sup_3s <= k * sup_s && sup_s <= k * sup_3s, "{sup_s} vs {sup_3s} with D = {d}");
}

#[test]
fn codimension_ratio_at_alpha_zero_is_below_pi() {
    for f in [Fractal::carpet(), Fractal::gasket()] {
        let radii: Vec<f64> = (0..8).map(|k| 2f64.powi(-k)).collect();
        for x in [Point2::new(0.0, 0.0), Point2::new(1.0 / 3.0, 1.0 / 3.0), Point2::new(0.5, 0.0)] {
            for c in codimension_profile(&f, 0.0, x, &radii, 1e-3).unwrap() {
                assert!(c.ratio <= std::f64::consts::PI * (1.0 + 1e-3), "{x:?} r={}: {}", c.radius, c.ratio);
            }
        }
    }
}

#[test]
fn shell_masses_grow_and_follow_the_fit() {
    let curve = KochCurve::new(5).unwrap();
    let x = curve.vertices()[0];
    let rhos: Vec<f64> = (3..=7).rev().map(|k| 2f64.powi(-k)).collect();
    let p = shell_profile(x, 0.5, &rhos, 5, 0.5).unwrap();
    for w in p.masses.windows(2) {
        assert!(w[0].value.lo <= w[1].value.lo && w[0].value.hi <= w[1].value.hi);
    }
    for w in p.estimates.windows(2) {
        assert!(w[0] <= w[1]);
    }
    assert!(p.estimates.iter().all(|&m| m <= p.ball_mass));
    // Points of the fitted range (all but the two largest ρ) sit within a
    // factor 2 of the fitted power law.
    for (rho, m) in p.rho_list.iter().zip(&p.estimates).take(rhos.len() - 2) {
        let fit = (p.fitted_intercept + p.fitted_slope * rho.ln()).exp();
        assert!(*m <= 2.0 * fit && *m >= fit / 2.0, "ρ={rho}: {m} vs {fit}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ap_product_is_at_least_one(index in 0u64..10_000, alpha in -0.1f64..0.1, p in 1.5f64..3.0, gasket in any::<bool>()) {
        let f = if gasket { Fractal::gasket() } else { Fractal::carpet() };
        let s = sample_square(f.spec(), 3, index);
        let v = ap_product(&f, &s, alpha, p, TOL).unwrap();
        if v.status == Status::Converged {
            prop_assert!(v.hi >= 1.0 - TOL, "{s:?}: {v:?}");
        }
    }

    #[test]
    fn ap_product_at_alpha_zero_is_one(index in 0u64..10_000, p in 1.1f64..4.0) {
        let f = Fractal::carpet();
        let s = sample_square(f.spec(), 4, index);
        let v = ap_product(&f, &s, 0.0, p, 1e-6).unwrap();
        prop_assert!((v.mid() - 1.0).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn admissibility_splits_at_the_cut(alpha in -0.1f64..=0.0, u in 0.05f64..0.95, v in 0.01f64..0.99) {
        // For 1 < p < 1 + γ the cut 1 − γ/p lies below 1/p, so pθ < 1 holds
        // on both sides of it and exactly one theorem applies.
        let spec = FractalSpec::carpet();
        let gamma = alpha + 2.0 - spec.hausdorff_dim;
        let p = 1.0 + u * gamma;
        let theta = v / p;
        let w = WeightParams::new(&spec, alpha, p, theta, 1.0).unwrap();
        prop_assert_ne!(trace_admissible(&w), extension_admissible(&w));
        prop_assert_eq!(trace_admissible(&w), theta < w.theta_cut());
    }
}
