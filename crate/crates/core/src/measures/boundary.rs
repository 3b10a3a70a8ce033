//! The normalized self-similar measure `ν` on `E`: ball masses by cell
//! counting and `ν`-distributed samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Address, Cell, FractalKind, FractalSpec, Point2};
use crate::rng::stream;

/// Sum of the masses of the level-`level` cells meeting the open ball
/// `B(center, r)`; cells entirely inside the ball are counted without
/// descending further.
pub fn nu_ball(spec: &FractalSpec, center: Point2, r: f64, level: u32) -> f64 {
    let roots = Cell::roots(spec.kind);
    let root_mass = 1.0 / roots.len() as f64;
    roots.iter().map(|c| nu_cell(c, root_mass, 0, center, r, level)).sum()
}

fn nu_cell(cell: &Cell, mass: f64, depth: u32, center: Point2, r: f64, level: u32) -> f64 {
    if cell.distance_to(center) >= r {
        return 0.0;
    }
    if depth == level || cell.max_distance_to(center) < r {
        return mass;
    }
    let b = cell.branching();
    let child_mass = mass / b as f64;
    (0..b).map(|d| nu_cell(&cell.child(d), child_mass, depth + 1, center, r, level)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: Point2,
    pub address: Address,
    pub mass: f64,
}

/// `ν`-distributed points on `E` with their addresses and masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySampleSet {
    pub points: Vec<BoundarySample>,
    pub total_mass: f64,
    pub seed: u64,
    /// Number of subdivisions in every address.
    pub depth: u32,
}

impl BoundarySampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.points.iter().map(|s| s.point).collect()
    }

    /// The first `n` points, reweighted to total mass 1 (still i.i.d.).
    pub fn prefix(&self, n: usize) -> BoundarySampleSet {
        let n = n.min(self.len());
        let points = self.points[..n]
            .iter()
            .map(|s| BoundarySample { mass: 1.0 / n as f64, ..s.clone() })
            .collect();
        BoundarySampleSet { points, total_mass: 1.0, seed: self.seed, depth: self.depth }
    }
}

/// Sample depth used for `n` points.
pub fn sample_depth(spec: &FractalSpec, n: usize) -> u32 {
    let b = spec.branching as f64;
    ((n.max(1) as f64).ln() / b.ln()).ceil() as u32 + 10
}

/// `n` i.i.d. points: uniform random digit strings, each mapped to the anchor
/// of its cell.
pub fn boundary_sample(spec: &FractalSpec, n: usize, seed: u64) -> BoundarySampleSet {
    let depth = sample_depth(spec, n);
    let mut rng = stream(seed, 0);
    let roots = Cell::roots(spec.kind);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut digits = Vec::with_capacity(depth as usize + 1);
        let mut cell = if spec.kind == FractalKind::Koch {
            let side = rng.gen_range(0..roots.len());
            digits.push(side as u8);
            roots[side]
        } else {
            roots[0]
        };
        for _ in 0..depth {
            let d = rng.gen_range(0..spec.branching as u8);
            digits.push(d);
            cell = cell.child(d);
        }
        points.push(BoundarySample {
            point: cell.anchor(),
            address: Address(digits),
            mass: 1.0 / n as f64,
        });
    }
    BoundarySampleSet { points, total_mass: 1.0, seed, depth }
}
