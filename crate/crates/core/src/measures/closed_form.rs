//! Exact weighted areas of holes and of scaled copies of the carpet and gasket.

use serde::{Deserialize, Serialize};

/// Either a finite exact value or a certified `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    Finite(f64),
    Divergent,
}

impl ClosedForm {
    pub fn value(self) -> f64 {
        match self {
            ClosedForm::Finite(v) => v,
            ClosedForm::Divergent => f64::INFINITY,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, ClosedForm::Divergent)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ClosedForm::Finite(v) => Some(v),
            ClosedForm::Divergent => None,
        }
    }
}

/// `c_α = 8·2^{-(α+2)} / ((α+1)(α+2))`, the weighted area of a unit-side hole.
pub fn c_alpha(alpha: f64) -> f64 {
    8.0 * 2f64.powf(-(alpha + 2.0)) / ((alpha + 1.0) * (alpha + 2.0))
}

/// Weighted area of a square carpet hole with side `s`: `c_α s^{α+2}`.
pub fn carpet_hole_measure(side: f64, alpha: f64) -> ClosedForm {
    if alpha <= -1.0 {
        return ClosedForm::Divergent;
    }
    ClosedForm::Finite(c_alpha(alpha) * side.powf(alpha + 2.0))
}

/// Weighted area of a generation-`k` carpet hole (side `3^{-k}`).
pub fn hole_measure_carpet(k: u32, alpha: f64) -> ClosedForm {
    carpet_hole_measure(3f64.powi(-(k as i32)), alpha)
}

/// Weighted area of a carpet cell of side `s` (a scaled copy of the carpet):
/// `c_α s^{α+2} / (3^{α+2} − 8)`, finite only when `3^{α+2} > 8`.
pub fn carpet_cell_measure(side: f64, alpha: f64) -> ClosedForm {
    let ratio = 3f64.powf(alpha + 2.0);
    if alpha <= -1.0 || ratio <= 8.0 {
        return ClosedForm::Divergent;
    }
    ClosedForm::Finite(c_alpha(alpha) * side.powf(alpha + 2.0) / (ratio - 8.0))
}

/// Weighted area of a gasket hole triangle of side `s`:
/// `6/((α+1)(α+2)) · 3^{-(α+1)/2} · (s/2)^{α+2}`.
pub fn hole_measure_gasket(side: f64, alpha: f64) -> ClosedForm {
    if alpha <= -1.0 {
        return ClosedForm::Divergent;
    }
    let c = 6.0 / ((alpha + 1.0) * (alpha + 2.0)) * 3f64.powf(-(alpha + 1.0) / 2.0);
    ClosedForm::Finite(c * (0.5 * side).powf(alpha + 2.0))
}

/// Weighted area of a gasket cell of side `s`: its hole of side `s/2` plus
/// `3^j` holes of side `s·2^{-j-1}` at every depth `j`, finite only when
/// `2^{α+2} > 3`.
pub fn gasket_cell_measure(side: f64, alpha: f64) -> ClosedForm {
    let q = 3.0 * 2f64.powf(-(alpha + 2.0));
    if alpha <= -1.0 || q >= 1.0 {
        return ClosedForm::Divergent;
    }
    match hole_measure_gasket(0.5 * side, alpha) {
        ClosedForm::Finite(unit) => ClosedForm::Finite(unit / (1.0 - q)),
        ClosedForm::Divergent => ClosedForm::Divergent,
    }
}

/// Weighted area of the level-`k` gasket triangle (side `2^{-k}`).
pub fn gasket_triangle_measure(k: u32, alpha: f64) -> ClosedForm {
    gasket_cell_measure(2f64.powi(-(k as i32)), alpha)
}
