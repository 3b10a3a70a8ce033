use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::koch::{outward_normal, BUMP_HEIGHT};
use super::polygon::{contains_convex, distance_to_convex};
use super::{FractalKind, FractalSpec, Point2, SQRT3};
use crate::{Error, Result};

/// A finite IFS address. Carpet digits are `0..8`, gasket digits `0..3`. A
/// snowflake address starts with the side digit `0..3` followed by Koch-curve
/// digits `0..4`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Address(pub Vec<u8>);

impl Address {
    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every digit against the alphabet of `spec`.
    pub fn validate(&self, spec: &FractalSpec) -> Result<()> {
        for (i, &d) in self.0.iter().enumerate() {
            let limit = if i == 0 { spec.leading_alphabet() } else { spec.branching as u8 };
            if d >= limit {
                return Err(Error::InvalidInput(format!(
                    "digit {d} at position {i} outside alphabet 0..{limit} for {:?}",
                    spec.kind
                )));
            }
        }
        Ok(())
    }

    /// Number of self-similar subdivisions the address encodes.
    pub fn depth(&self, kind: FractalKind) -> usize {
        match kind {
            FractalKind::Koch => self.0.len().saturating_sub(1),
            _ => self.0.len(),
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidInput(format!("bad address digit `{c}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Address)
    }
}

impl From<Address> for String {
    fn from(a: Address) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Address {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A cell of the self-similar structure, described by its footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Carpet cell `[o, o + side]²`.
    Square { origin: Point2, side: f64 },
    /// Upright gasket triangle with lower-left vertex `origin`.
    Triangle { origin: Point2, side: f64 },
    /// Koch-curve cell generated by the segment `a → b`.
    Segment { a: Point2, b: Point2 },
}

impl Cell {
    /// Top-level cells; the snowflake has one per side of `K_0`.
    pub fn roots(kind: FractalKind) -> Vec<Cell> {
        match kind {
            FractalKind::Carpet => vec![Cell::Square { origin: Point2::new(0.0, 0.0), side: 1.0 }],
            FractalKind::Gasket => {
                vec![Cell::Triangle { origin: Point2::new(0.0, 0.0), side: 1.0 }]
            }
            FractalKind::Koch => {
                let v = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, SQRT3 / 2.0)];
                (0..3).map(|i| Cell::Segment { a: v[i], b: v[(i + 1) % 3] }).collect()
            }
        }
    }

    pub fn child(&self, digit: u8) -> Cell {
        match *self {
            Cell::Square { origin, side } => {
                let (tx, ty) = super::carpet::SUBCELLS[digit as usize];
                let s = side / 3.0;
                Cell::Square {
                    origin: origin + Point2::new(tx as f64 * s, ty as f64 * s),
                    side: s,
                }
            }
            Cell::Triangle { origin, side } => {
                let s = side / 2.0;
                let off = match digit {
                    0 => Point2::new(0.0, 0.0),
                    1 => Point2::new(s, 0.0),
                    _ => Point2::new(0.5 * s, 0.5 * SQRT3 * s),
                };
                Cell::Triangle { origin: origin + off, side: s }
            }
            Cell::Segment { a, b } => {
                let third = (b - a) * (1.0 / 3.0);
                let p1 = a + third;
                let apex = p1 + third.rotate(-std::f64::consts::FRAC_PI_3);
                let p2 = a + third * 2.0;
                match digit {
                    0 => Cell::Segment { a, b: p1 },
                    1 => Cell::Segment { a: p1, b: apex },
                    2 => Cell::Segment { a: apex, b: p2 },
                    _ => Cell::Segment { a: p2, b },
                }
            }
        }
    }

    pub fn branching(&self) -> u8 {
        match self {
            Cell::Square { .. } => 8,
            Cell::Triangle { .. } => 3,
            Cell::Segment { .. } => 4,
        }
    }

    /// Canonical point of `E` inside the cell.
    pub fn anchor(&self) -> Point2 {
        match *self {
            Cell::Square { origin, .. } | Cell::Triangle { origin, .. } => origin,
            Cell::Segment { a, .. } => a,
        }
    }

    /// Convex footprint containing `E ∩ cell`.
    pub fn footprint(&self) -> Vec<Point2> {
        match *self {
            Cell::Square { origin: o, side: s } => vec![
                o,
                o + Point2::new(s, 0.0),
                o + Point2::new(s, s),
                o + Point2::new(0.0, s),
            ],
            Cell::Triangle { origin: o, side: s } => {
                vec![o, o + Point2::new(s, 0.0), o + Point2::new(0.5 * s, 0.5 * SQRT3 * s)]
            }
            Cell::Segment { a, b } => {
                let d = b - a;
                let apex = (a + b) * 0.5 + outward_normal(d) * (d.norm() * BUMP_HEIGHT);
                // a → apex → b is counter-clockwise for an outward bump.
                vec![a, apex, b]
            }
        }
    }

    pub fn diam(&self) -> f64 {
        match *self {
            Cell::Square { side, .. } => std::f64::consts::SQRT_2 * side,
            Cell::Triangle { side, .. } => side,
            Cell::Segment { a, b } => a.dist(b),
        }
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        distance_to_convex(&self.footprint(), p)
    }

    pub fn max_distance_to(&self, p: Point2) -> f64 {
        self.footprint().iter().map(|v| v.dist(p)).fold(0.0, f64::max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        contains_convex(&self.footprint(), p)
    }
}

/// Mass of one level-`depth` cell under the normalized self-similar measure.
pub fn cell_mass(kind: FractalKind, depth: u32) -> f64 {
    match kind {
        FractalKind::Carpet => 8f64.powi(-(depth as i32)),
        FractalKind::Gasket => 3f64.powi(-(depth as i32)),
        FractalKind::Koch => 4f64.powi(-(depth as i32)) / 3.0,
    }
}

/// Cell addressed by `a`; `None` for the empty snowflake address, which
/// denotes the whole curve rather than a cell.
pub fn address_cell(spec: &FractalSpec, a: &Address) -> Result<Option<Cell>> {
    a.validate(spec)?;
    let mut digits = a.digits().iter();
    let mut cell = match spec.kind {
        FractalKind::Koch => match digits.next() {
            Some(&side) => Cell::roots(FractalKind::Koch)[side as usize],
            None => return Ok(None),
        },
        kind => Cell::roots(kind)[0],
    };
    for &d in digits {
        cell = cell.child(d);
    }
    Ok(Some(cell))
}

/// Applies the IFS maps along the digits and returns the anchor point of the
/// resulting cell.
pub fn address_to_point(spec: &FractalSpec, a: &Address) -> Result<Point2> {
    Ok(address_cell(spec, a)?.map(|c| c.anchor()).unwrap_or(Point2::new(0.0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carpet_anchors() {
        let spec = FractalSpec::carpet();
        assert_eq!(address_to_point(&spec, &Address::default()).unwrap(), Point2::new(0.0, 0.0));
        let zeros: Address = "0000000".parse().unwrap();
        assert_eq!(address_to_point(&spec, &zeros).unwrap(), Point2::new(0.0, 0.0));
        assert!(address_to_point(&spec, &"18".parse().unwrap()).is_err());
    }

    #[test]
    fn anchors_lie_on_the_fractal() {
        let cases = [
            (FractalSpec::carpet(), "73152"),
            (FractalSpec::gasket(), "21021"),
        ];
        for (spec, s) in cases {
            let p = address_to_point(&spec, &s.parse().unwrap()).unwrap();
            let d = match spec.kind {
                FractalKind::Carpet => super::super::carpet_distance(p),
                _ => super::super::gasket_distance(p),
            };
            assert!(d < 1e-14, "{s}: {d}");
        }
    }

    #[test]
    fn koch_addresses_hit_polygon_vertices() {
        let spec = FractalSpec::koch();
        let k2 = super::super::koch_polygon(2).unwrap();
        // Side 1, digits 3 then 2: segment index 1·16 + 3·4 + 2 of K_2.
        let p = address_to_point(&spec, &"132".parse().unwrap()).unwrap();
        assert!(p.dist(k2[16 + 12 + 2]) < 1e-14);
    }

    #[test]
    fn display_round_trip() {
        let a: Address = "0123".parse().unwrap();
        assert_eq!(a.to_string(), "0123");
    }
}
