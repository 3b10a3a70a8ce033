//! The weighted measure `μ_α(A) = ∫_A dist(x, E)^α dx` and the boundary
//! measure `ν` on `E`.

mod boundary;
pub mod closed_form;
mod mc;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::geometry::{Fractal, FractalSpec, IntervalValue, Region, Square, Status};
use crate::{Error, Result};

pub use boundary::{boundary_sample, nu_ball, BoundarySample, BoundarySampleSet};
pub use closed_form::{
    c_alpha, carpet_cell_measure, carpet_hole_measure, gasket_cell_measure,
    gasket_triangle_measure, hole_measure_carpet, hole_measure_gasket, ClosedForm,
};
pub use mc::mu_alpha_mc_oracle;
pub use quadrature::{integrate, Integrand, QuadratureOptions, Unit};

/// The exponents `(α, p, q, θ)` and the codimension `γ = α + 2 − Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub alpha: f64,
    pub p: f64,
    pub theta: f64,
    pub q: f64,
    pub gamma: f64,
}

impl WeightParams {
    pub fn new(spec: &FractalSpec, alpha: f64, p: f64, theta: f64, q: f64) -> Result<Self> {
        if !(alpha.is_finite() && p.is_finite() && theta.is_finite() && q.is_finite()) {
            return Err(Error::InvalidInput("weight parameters must be finite".into()));
        }
        if p <= 1.0 {
            return Err(Error::InvalidInput(format!("p = {p} must exceed 1")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidInput(format!("θ = {theta} must lie in (0, 1)")));
        }
        if !(q >= 1.0 && q < p) {
            return Err(Error::InvalidInput(format!("q = {q} must lie in [1, p)")));
        }
        Ok(WeightParams { alpha, p, theta, q, gamma: alpha + 2.0 - spec.hausdorff_dim })
    }

    /// `1 − γ/p`, the cut between trace and extension smoothness.
    pub fn theta_cut(&self) -> f64 {
        1.0 - self.gamma / self.p
    }
}

/// Interval estimate of a `μ_α` integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: IntervalValue,
    pub cells_used: usize,
    pub tolerance_requested: f64,
}

impl MeasureEstimate {
    pub fn status(&self) -> Status {
        self.value.status
    }

    fn exact(v: ClosedForm, tol: f64) -> Self {
        let value = match v {
            ClosedForm::Finite(x) => IntervalValue::exact(x),
            ClosedForm::Divergent => IntervalValue::divergent(f64::INFINITY),
        };
        MeasureEstimate { value, cells_used: 1, tolerance_requested: tol }
    }
}

/// `μ_α(R)` for a square or ball `R`, to relative width `tol` within `budget`
/// evaluated pieces.
pub fn mu_alpha_region(
    fractal: &Fractal,
    region: &Region,
    alpha: f64,
    tol: f64,
    budget: usize,
) -> Result<MeasureEstimate> {
    integrate_weighted(fractal, region, alpha, &Unit, tol, budget)
}

/// `∫_R f dμ_α` for a bounded integrand `f`.
pub fn integrate_weighted(
    fractal: &Fractal,
    region: &Region,
    alpha: f64,
    f: &dyn Integrand,
    tol: f64,
    budget: usize,
) -> Result<MeasureEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    check_region(region)?;
    let opts = QuadratureOptions { tol, budget, ..Default::default() };
    let r = integrate(fractal, region, alpha, f, &opts);
    Ok(MeasureEstimate { value: r.value, cells_used: r.pieces, tolerance_requested: tol })
}

fn check_region(region: &Region) -> Result<()> {
    let ok = match region {
        Region::Square(s) => s.side > 0.0 && s.side.is_finite() && s.center.is_finite(),
        Region::Ball(b) => b.radius > 0.0 && b.radius.is_finite() && b.center.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("degenerate region {region:?}")))
    }
}

/// Position of a square in the ternary grid `𝒮^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridCase {
    /// A scaled copy of the carpet.
    Carpet,
    /// A generation-`k` hole.
    Hole,
    /// Anything else (inside a larger hole or outside `[0,1]²`).
    Other,
}

/// Generation `k` and integer indices `(m, n)` of a square in `𝒮^k`.
pub fn grid_indices(s: &Square) -> Option<(u32, i64, i64)> {
    if !(s.side > 0.0 && s.side <= 1.0) {
        return None;
    }
    let k = (-s.side.ln() / 3f64.ln()).round();
    if !(0.0..=30.0).contains(&k) {
        return None;
    }
    let side = 3f64.powi(-(k as i32));
    if (s.side - side).abs() > 1e-12 * side {
        return None;
    }
    let m = s.center.x / side - 0.5;
    let n = s.center.y / side - 0.5;
    let (mr, nr) = (m.round(), n.round());
    if (m - mr).abs() > 1e-9 || (n - nr).abs() > 1e-9 {
        return None;
    }
    Some((k as u32, mr as i64, nr as i64))
}

/// Classifies a grid square by its ternary digits.
pub fn classify_grid_square(k: u32, m: i64, n: i64) -> GridCase {
    let size = 3i64.pow(k);
    if m < 0 || n < 0 || m >= size || n >= size {
        return GridCase::Other;
    }
    for level in 1..=k {
        let div = 3i64.pow(k - level);
        let (dx, dy) = ((m / div) % 3, (n / div) % 3);
        if dx == 1 && dy == 1 {
            return if level == k { GridCase::Hole } else { GridCase::Other };
        }
    }
    GridCase::Carpet
}

/// `μ_α(S)` for a carpet grid square: exact for scaled carpets and holes,
/// adaptive quadrature otherwise.
pub fn grid_square_measure_carpet(s: &Square, alpha: f64, tol: f64) -> Result<MeasureEstimate> {
    let (k, m, n) = grid_indices(s).ok_or_else(|| {
        Error::InvalidInput(format!("{s:?} is not a square of the ternary grid"))
    })?;
    match classify_grid_square(k, m, n) {
        GridCase::Carpet => Ok(MeasureEstimate::exact(carpet_cell_measure(s.side, alpha), tol)),
        GridCase::Hole => Ok(MeasureEstimate::exact(carpet_hole_measure(s.side, alpha), tol)),
        GridCase::Other => {
            let opts = QuadratureOptions::default();
            mu_alpha_region(&Fractal::carpet(), &Region::Square(*s), alpha, tol, opts.budget)
        }
    }
}

/// Default quadrature budget.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Default relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn grid_classification() {
        let unit = Square::from_corner(0.0, 0.0, 1.0);
        assert_eq!(grid_indices(&unit), Some((0, 0, 0)));
        assert_eq!(classify_grid_square(0, 0, 0), GridCase::Carpet);
        assert_eq!(classify_grid_square(1, 1, 1), GridCase::Hole);
        assert_eq!(classify_grid_square(2, 4, 4), GridCase::Other);
        assert_eq!(classify_grid_square(2, 1, 1), GridCase::Hole);
        assert_eq!(classify_grid_square(2, 0, 3), GridCase::Carpet);
        assert_eq!(classify_grid_square(1, 3, 0), GridCase::Other);
        assert!(grid_indices(&Square::new(Point2::new(0.4, 0.5), 1.0 / 3.0)).is_none());
    }

    #[test]
    fn grid_square_values() {
        let unit = Square::from_corner(0.0, 0.0, 1.0);
        assert_eq!(grid_square_measure_carpet(&unit, 0.0, 1e-6).unwrap().value.lo, 1.0);
        let v = grid_square_measure_carpet(&unit, 1.0, 1e-6).unwrap().value;
        assert!((v.lo - 1.0 / 114.0).abs() < 1e-16 && v.lo == v.hi);
        let hole = Square::from_corner(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        let v = grid_square_measure_carpet(&hole, 0.0, 1e-6).unwrap().value;
        assert!((v.lo - 1.0 / 9.0).abs() < 1e-15);
        let qm2 = FractalSpec::carpet().hausdorff_dim - 2.0;
        let v = grid_square_measure_carpet(&unit, qm2, 1e-6).unwrap().value;
        assert_eq!(v.status, Status::Divergent);
        // Inside the central hole: falls back to quadrature.
        let inner = Square::from_corner(4.0 / 9.0, 4.0 / 9.0, 1.0 / 9.0);
        let v = grid_square_measure_carpet(&inner, 0.0, 1e-6).unwrap().value;
        assert!((v.mid() - 1.0 / 81.0).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn params_gamma() {
        let spec = FractalSpec::carpet();
        let w = WeightParams::new(&spec, -0.05, 2.0, 0.4, 1.5).unwrap();
        assert!((w.gamma - (1.95 - 8f64.ln() / 3f64.ln())).abs() < 1e-15);
        assert!(WeightParams::new(&spec, -0.05, 1.0, 0.4, 1.0).is_err());
        assert!(WeightParams::new(&spec, -0.05, 2.0, 1.0, 1.5).is_err());
        assert!(WeightParams::new(&spec, -0.05, 2.0, 0.4, 2.0).is_err());
    }
}
