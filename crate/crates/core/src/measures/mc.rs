use rand::Rng;

use crate::geometry::{Fractal, Point2, Region};
use crate::rng::stream;

/// `3^{-60}`, the resolution of the carpet and gasket descents.
const RESOLUTION: f64 = 2.3e-29;

/// Plain Monte Carlo estimate of `μ_α(R)`: returns `(mean, standard error)`.
/// Independent of the quadrature engine and used to cross-check it.
///
/// Uniform doubles cannot resolve distances much below `1e-16`, so for `α`
/// close to `Q − 2` (where deep levels carry a large share of the mass) the
/// estimate is biased low.
pub fn mu_alpha_mc_oracle(fractal: &Fractal, region: &Region, alpha: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = stream(seed, 0);
    let area = region.area();
    let n = n.max(1);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let p = match region {
            Region::Square(s) => Point2::new(
                s.center.x + s.side * (rng.gen::<f64>() - 0.5),
                s.center.y + s.side * (rng.gen::<f64>() - 0.5),
            ),
            Region::Ball(b) => {
                let r = b.radius * rng.gen::<f64>().sqrt();
                let t = std::f64::consts::TAU * rng.gen::<f64>();
                b.center + Point2::new(r * t.cos(), r * t.sin())
            }
        };
        // Points numerically on E sit at the distance oracle's resolution.
        let d = fractal.distance(p).max(RESOLUTION);
        let v = if fractal.in_domain(p) { area * d.powf(alpha) } else { 0.0 };
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Square;
    use crate::measures::hole_measure_carpet;

    #[test]
    fn constant_integrand() {
        let f = Fractal::carpet();
        let r = Region::Square(Square::from_corner(0.0, 0.0, 1.0));
        let (m, se) = mu_alpha_mc_oracle(&f, &r, 0.0, 1000, 5);
        assert!((m - 1.0).abs() < 1e-12 && se < 1e-6);
        assert_eq!(mu_alpha_mc_oracle(&f, &r, 0.3, 1000, 5), mu_alpha_mc_oracle(&f, &r, 0.3, 1000, 5));
    }

    #[test]
    fn hole_within_three_sigma() {
        let f = Fractal::carpet();
        let r = Region::Square(Square::from_corner(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0));
        let (m, se) = mu_alpha_mc_oracle(&f, &r, 0.5, 1_000_000, 9);
        let exact = hole_measure_carpet(1, 0.5).value();
        assert!((m - exact).abs() <= 3.0 * se, "{m} ± {se} vs {exact}");
    }
}
