//! Distance oracles, membership tests and IFS addressing for the built-in
//! fractal sets.

mod address;
pub mod carpet;
pub mod gasket;
pub mod koch;
pub mod polygon;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use address::{address_cell, address_to_point, cell_mass, Address, Cell};
pub use carpet::carpet_distance;
pub use gasket::gasket_distance;
pub use koch::{inside_snowflake, koch_distance, koch_polygon, KochCurve, Membership};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Axis-aligned closed rectangle, mostly used as a bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn center(&self) -> Point2 {
        (self.min + self.max) * 0.5
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    /// Largest distance from `p` to a point of the rectangle.
    pub fn max_distance_to(&self, p: Point2) -> f64 {
        let dx = (p.x - self.min.x).abs().max((p.x - self.max.x).abs());
        let dy = (p.y - self.min.y).abs().max((p.y - self.max.y).abs());
        dx.hypot(dy)
    }
}

/// The open square `S(x, s) = {y : ‖x − y‖_∞ < s/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Point2,
    pub side: f64,
}

impl Square {
    pub fn new(center: Point2, side: f64) -> Self {
        Square { center, side }
    }

    /// Square with lower-left corner `(x0, y0)`.
    pub fn from_corner(x0: f64, y0: f64, side: f64) -> Self {
        Square::new(Point2::new(x0 + 0.5 * side, y0 + 0.5 * side), side)
    }

    /// `τ·S(x, s) = S(x, τs)`.
    pub fn scaled(&self, tau: f64) -> Square {
        Square::new(self.center, self.side * tau)
    }

    pub fn rect(&self) -> Rect {
        let h = 0.5 * self.side;
        Rect {
            min: Point2::new(self.center.x - h, self.center.y - h),
            max: Point2::new(self.center.x + h, self.center.y + h),
        }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point2,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point2, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.dist(self.center) < self.radius
    }

    pub fn bounding_square(&self) -> Square {
        Square::new(self.center, 2.0 * self.radius)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Integration region accepted by the measure routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Square(Square),
    Ball(Ball),
}

impl Region {
    pub fn area(&self) -> f64 {
        match self {
            Region::Square(s) => s.area(),
            Region::Ball(b) => b.area(),
        }
    }

    pub fn bounding_square(&self) -> Square {
        match self {
            Region::Square(s) => *s,
            Region::Ball(b) => b.bounding_square(),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Region::Square(s) => {
                (p.x - s.center.x).abs() < 0.5 * s.side && (p.y - s.center.y).abs() < 0.5 * s.side
            }
            Region::Ball(b) => b.contains(p),
        }
    }
}

/// Outcome attached to every interval-valued computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    BudgetExceeded,
    Divergent,
}

impl Status {
    /// The more severe of two statuses (`Divergent` > `BudgetExceeded` > `Converged`).
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

/// A closed interval `[lo, hi]` with its convergence status. A divergent value
/// carries `hi = +∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalValue {
    pub lo: f64,
    pub hi: f64,
    pub status: Status,
}

impl IntervalValue {
    pub fn new(lo: f64, hi: f64, status: Status) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "lo {lo} > hi {hi}");
        IntervalValue { lo, hi, status }
    }

    pub fn exact(v: f64) -> Self {
        IntervalValue::new(v, v, Status::Converged)
    }

    pub fn divergent(lo: f64) -> Self {
        IntervalValue::new(lo, f64::INFINITY, Status::Divergent)
    }

    pub fn mid(&self) -> f64 {
        if self.hi.is_infinite() {
            f64::INFINITY
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.status != Status::Divergent && self.hi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FractalKind {
    Carpet,
    Gasket,
    Koch,
}

impl std::str::FromStr for FractalKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "carpet" => Ok(FractalKind::Carpet),
            "gasket" => Ok(FractalKind::Gasket),
            "koch" | "snowflake" => Ok(FractalKind::Koch),
            other => Err(crate::Error::InvalidInput(format!("unknown fractal `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCell {
    /// `[0,1]²`
    UnitSquare,
    /// Equilateral triangle with vertices `(0,0), (1,0), (1/2, √3/2)`.
    UnitTriangle,
}

/// Static description of one of the built-in fractals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalSpec {
    pub kind: FractalKind,
    pub hausdorff_dim: f64,
    pub base_cell: BaseCell,
    pub branching: u32,
    pub contraction: f64,
}

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

impl FractalSpec {
    pub fn carpet() -> Self {
        FractalSpec {
            kind: FractalKind::Carpet,
            hausdorff_dim: 8f64.ln() / 3f64.ln(),
            base_cell: BaseCell::UnitSquare,
            branching: 8,
            contraction: 1.0 / 3.0,
        }
    }

    pub fn gasket() -> Self {
        FractalSpec {
            kind: FractalKind::Gasket,
            hausdorff_dim: 3f64.ln() / 2f64.ln(),
            base_cell: BaseCell::UnitTriangle,
            branching: 3,
            contraction: 0.5,
        }
    }

    pub fn koch() -> Self {
        FractalSpec {
            kind: FractalKind::Koch,
            hausdorff_dim: 4f64.ln() / 3f64.ln(),
            base_cell: BaseCell::UnitTriangle,
            branching: 4,
            contraction: 1.0 / 3.0,
        }
    }

    pub fn from_kind(kind: FractalKind) -> Self {
        match kind {
            FractalKind::Carpet => Self::carpet(),
            FractalKind::Gasket => Self::gasket(),
            FractalKind::Koch => Self::koch(),
        }
    }

    /// Diameter of the limit set.
    pub fn diam(&self) -> f64 {
        match self.kind {
            FractalKind::Carpet => std::f64::consts::SQRT_2,
            FractalKind::Gasket => 1.0,
            // The snowflake is inscribed in the circumcircle of K_0.
            FractalKind::Koch => 2.0 / SQRT3,
        }
    }

    /// The ambient ball `B` with `E ⊂ ½B`.
    pub fn ambient_ball(&self) -> Ball {
        match self.kind {
            FractalKind::Carpet => Ball::new(Point2::new(0.5, 0.5), 1.5),
            FractalKind::Gasket | FractalKind::Koch => {
                Ball::new(Point2::new(0.5, SQRT3 / 6.0), 1.25)
            }
        }
    }

    /// Diameter of a level-`k` cell.
    pub fn cell_diam(&self, k: u32) -> f64 {
        let c = self.contraction.powi(k as i32);
        match self.kind {
            FractalKind::Carpet => std::f64::consts::SQRT_2 * c,
            FractalKind::Gasket => c,
            FractalKind::Koch => c,
        }
    }

    /// Number of digits the first position of an address may take.
    pub fn leading_alphabet(&self) -> u8 {
        match self.kind {
            FractalKind::Koch => 3,
            _ => self.branching as u8,
        }
    }
}

/// Default level of the polygonal approximant used for the snowflake.
pub const DEFAULT_KOCH_LEVEL: u32 = 7;

/// A fractal together with the data its distance oracle needs.
#[derive(Debug, Clone)]
pub struct Fractal {
    spec: FractalSpec,
    koch: Option<KochCurve>,
}

impl Fractal {
    pub fn carpet() -> Self {
        Fractal { spec: FractalSpec::carpet(), koch: None }
    }

    pub fn gasket() -> Self {
        Fractal { spec: FractalSpec::gasket(), koch: None }
    }

    /// Snowflake approximated by the polygon `K_level`.
    pub fn koch(level: u32) -> crate::Result<Self> {
        Ok(Fractal { spec: FractalSpec::koch(), koch: Some(KochCurve::new(level)?) })
    }

    pub fn from_kind(kind: FractalKind) -> crate::Result<Self> {
        match kind {
            FractalKind::Carpet => Ok(Self::carpet()),
            FractalKind::Gasket => Ok(Self::gasket()),
            FractalKind::Koch => Self::koch(DEFAULT_KOCH_LEVEL),
        }
    }

    pub fn spec(&self) -> &FractalSpec {
        &self.spec
    }

    pub fn kind(&self) -> FractalKind {
        self.spec.kind
    }

    pub fn koch_curve(&self) -> Option<&KochCurve> {
        self.koch.as_ref()
    }

    /// Best point estimate of `dist(p, E)`.
    pub fn distance(&self, p: Point2) -> f64 {
        match (&self.koch, self.spec.kind) {
            (Some(k), _) => k.distance(p),
            (None, FractalKind::Carpet) => carpet_distance(p),
            (None, FractalKind::Gasket) => gasket_distance(p),
            (None, FractalKind::Koch) => unreachable!("koch fractal without curve"),
        }
    }

    /// Guaranteed bracket for `dist(p, E)`; degenerate except for the snowflake.
    pub fn distance_bounds(&self, p: Point2) -> (f64, f64) {
        match &self.koch {
            Some(k) => {
                let iv = k.distance_interval(p);
                (iv.lo, iv.hi)
            }
            None => {
                let d = self.distance(p);
                (d, d)
            }
        }
    }

    /// Whether `p` lies where the weighted measure lives. The carpet and gasket
    /// measures live on the whole plane; the snowflake measure on `Ω`.
    pub fn in_domain(&self, p: Point2) -> bool {
        match &self.koch {
            Some(k) => k.winding_inside(p),
            None => true,
        }
    }
}
