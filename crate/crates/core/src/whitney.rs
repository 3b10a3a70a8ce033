//! Whitney cover of `B \ E` by dyadic squares, the balls they generate, and a
//! Lipschitz partition of unity subordinate to the doubled balls.
//!
//! A quadtree square `Q` of side `s` centered at `c` is accepted once
//! `dist(c, E) ≥ 3s`; the parent of an accepted square was rejected, which
//! caps `dist(c, E) < 6s + s/√2`. The cell ball is `B(c, s)`: it contains `Q`,
//! carries the bump, and its double stays at distance `≥ s` from `E`.
//! Boundary averages are taken over `B(c, 2·dist(c, E))`, which meets `E`.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Cell, Fractal, Point2};
use crate::rng::stream;
use crate::{Ball, Error, Result};

/// Acceptance threshold: `dist(c, E) ≥ ACCEPT·side`.
pub const ACCEPT: f64 = 3.0;
/// Upper end of `dist(c, E)/side` for accepted squares.
pub const UPPER: f64 = 2.0 * ACCEPT + std::f64::consts::FRAC_1_SQRT_2;
/// Finest level built by default (squares of side `2^{-10}`).
pub const DEFAULT_MAX_LEVEL: i32 = 10;
/// Hard cap on the number of quadtree squares visited while building.
pub const MAX_SQUARES: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCell {
    /// `i` with `r = 2^{-i}`.
    pub level: i32,
    /// Position of the cell among the cells of its level.
    pub index: usize,
    /// Integer coordinates of the generating square within its level.
    pub ix: i64,
    pub iy: i64,
    pub center: Point2,
    /// Radius of the cell ball, equal to the side of the generating square.
    pub radius: f64,
    pub dist_to_e: f64,
}

impl WhitneyCell {
    /// Radius of the ball over which boundary averages are taken.
    pub fn avg_radius(&self) -> f64 {
        2.0 * self.dist_to_e
    }

    /// Radial hat `max(0, 1 − |x − c|/r)`; positive on the generating square.
    pub fn bump(&self, x: Point2) -> f64 {
        (1.0 - x.dist(self.center) / self.radius).max(0.0)
    }
}

/// One CSV row of an exported cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub i: i32,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

#[derive(Debug, Clone)]
pub struct WhitneyCover {
    pub cells: Vec<WhitneyCell>,
    pub max_level: i32,
    pub ball: Ball,
    fractal: Fractal,
    root_level: i32,
    root_min: Point2,
    index: HashMap<(i32, i64, i64), usize>,
}

/// Nonzero normalized weights `φ_{i,j}(x)`, keyed by cell id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionWeights {
    pub entries: Vec<(usize, f64)>,
}

impl PartitionWeights {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn side(level: i32) -> f64 {
    2f64.powi(-level)
}

/// Checks `E ⊂ ½B` on footprints of level-2 cells (the snowflake: on the
/// vertices of its approximant, padded by the Hausdorff bound).
fn check_half_ball(fractal: &Fractal, ball: &Ball) -> Result<()> {
    let half = 0.5 * ball.radius;
    let ok = match fractal.koch_curve() {
        Some(k) => {
            let pad = k.hausdorff_bound();
            k.vertices().iter().all(|p| p.dist(ball.center) + pad <= half)
        }
        None => {
            let mut cells = Cell::roots(fractal.kind());
            for _ in 0..2 {
                cells = cells.iter().flat_map(|c| (0..c.branching()).map(move |d| c.child(d))).collect();
            }
            cells.iter().all(|c| c.max_distance_to(ball.center) <= half)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!("E is not contained in half of {ball:?}")))
    }
}

/// Builds the cover of `ball \ E` down to squares of side `2^{-max_level}`.
pub fn build_whitney(fractal: &Fractal, ball: Ball, max_level: i32) -> Result<WhitneyCover> {
    if !(ball.radius > 0.0 && ball.radius.is_finite() && ball.center.is_finite()) {
        return Err(Error::InvalidInput(format!("degenerate ball {ball:?}")));
    }
    check_half_ball(fractal, &ball)?;
    let root_level = -(2.0 * ball.radius).log2().ceil() as i32;
    if max_level < root_level || max_level > 40 {
        return Err(Error::InvalidInput(format!("max_level {max_level} out of range")));
    }
    let root_side = side(root_level);
    let root_min = ball.center - Point2::new(0.5 * root_side, 0.5 * root_side);

    let mut cells = Vec::new();
    let mut per_level: HashMap<i32, usize> = HashMap::new();
    let mut index = HashMap::new();
    let mut stack = vec![(root_level, 0i64, 0i64)];
    let mut visited = 0usize;
    while let Some((level, ix, iy)) = stack.pop() {
        visited += 1;
        if visited > MAX_SQUARES {
            return Err(Error::Resource(format!(
                "Whitney cover at max_level {max_level} needs more than {MAX_SQUARES} squares"
            )));
        }
        let s = side(level);
        let min = root_min + Point2::new(ix as f64 * s, iy as f64 * s);
        let center = min + Point2::new(0.5 * s, 0.5 * s);
        // Skip squares missing the ball.
        let nearest = Point2::new(
            ball.center.x.clamp(min.x, min.x + s),
            ball.center.y.clamp(min.y, min.y + s),
        );
        if nearest.dist(ball.center) >= ball.radius {
            continue;
        }
        let d = fractal.distance(center);
        if d >= ACCEPT * s {
            let n = per_level.entry(level).or_insert(0);
            index.insert((level, ix, iy), cells.len());
            cells.push(WhitneyCell { level, index: *n, ix, iy, center, radius: s, dist_to_e: d });
            *n += 1;
        } else if level < max_level {
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                stack.push((level + 1, 2 * ix + dx, 2 * iy + dy));
            }
        }
    }
    Ok(WhitneyCover { cells, max_level, ball, fractal: fractal.clone(), root_level, root_min, index })
}

impl WhitneyCover {
    /// Points farther than this from `E` are covered.
    pub fn resolution(&self) -> f64 {
        4.0 * side(self.max_level)
    }

    pub fn fractal(&self) -> &Fractal {
        &self.fractal
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Id of the cell whose generating square contains `x`.
    pub fn locate(&self, x: Point2) -> Option<usize> {
        (self.root_level..=self.max_level).find_map(|level| {
            let s = side(level);
            let ix = ((x.x - self.root_min.x) / s).floor() as i64;
            let iy = ((x.y - self.root_min.y) / s).floor() as i64;
            self.index.get(&(level, ix, iy)).copied()
        })
    }

    /// Ids of the cells with `|x − c| < t·r`, given `d = dist(x, E)`.
    fn cells_within(&self, x: Point2, d: f64, t: f64) -> Vec<usize> {
        let mut out = Vec::new();
        // A cell of side s reaching x has d < (UPPER + t)·s, and d > (ACCEPT − t)·s.
        let s_min = d / (UPPER + t) * (1.0 - 1e-9);
        let s_max = if t < ACCEPT { d / (ACCEPT - t) * (1.0 + 1e-9) } else { f64::INFINITY };
        for level in self.root_level..=self.max_level {
            let s = side(level);
            if s > s_max {
                continue;
            }
            if s < s_min {
                break;
            }
            let reach = t * s;
            let lo_x = ((x.x - reach - self.root_min.x) / s - 0.5).floor() as i64;
            let hi_x = ((x.x + reach - self.root_min.x) / s - 0.5).ceil() as i64;
            let lo_y = ((x.y - reach - self.root_min.y) / s - 0.5).floor() as i64;
            let hi_y = ((x.y + reach - self.root_min.y) / s - 0.5).ceil() as i64;
            for ix in lo_x..=hi_x {
                for iy in lo_y..=hi_y {
                    if let Some(&id) = self.index.get(&(level, ix, iy)) {
                        if x.dist(self.cells[id].center) < reach {
                            out.push(id);
                        }
                    }
                }
            }
        }
        out
    }

    fn check_point(&self, x: Point2) -> Result<f64> {
        if !x.is_finite() || !self.ball.contains(x) {
            return Err(Error::InvalidInput(format!("({}, {}) lies outside the cover ball", x.x, x.y)));
        }
        let d = self.fractal.distance(x);
        if d <= self.resolution() {
            return Err(Error::Resolution(x));
        }
        Ok(d)
    }

    /// Normalized bump weights at `x`.
    pub fn partition_eval(&self, x: Point2) -> Result<PartitionWeights> {
        let d = self.check_point(x)?;
        let ids = self.cells_within(x, d, 1.0);
        let raw: Vec<(usize, f64)> =
            ids.into_iter().map(|id| (id, self.cells[id].bump(x))).filter(|e| e.1 > 0.0).collect();
        let total: f64 = raw.iter().map(|e| e.1).sum();
        if raw.is_empty() || total <= 0.0 {
            return Err(Error::Coverage(x));
        }
        Ok(PartitionWeights { entries: raw.into_iter().map(|(id, w)| (id, w / total)).collect() })
    }

    /// Normalized weights `φ_i(x)` with their gradients. A hat has no
    /// gradient at its own center; zero is used there.
    pub fn partition_gradient(&self, x: Point2) -> Result<Vec<(usize, f64, Point2)>> {
        let d = self.check_point(x)?;
        let raw: Vec<(usize, f64, Point2)> = self
            .cells_within(x, d, 1.0)
            .into_iter()
            .filter_map(|id| {
                let c = &self.cells[id];
                let psi = c.bump(x);
                if psi <= 0.0 {
                    return None;
                }
                let v = x - c.center;
                let n = v.norm();
                let g = if n > 0.0 { v * (-1.0 / (n * c.radius)) } else { Point2::new(0.0, 0.0) };
                Some((id, psi, g))
            })
            .collect();
        let total: f64 = raw.iter().map(|e| e.1).sum();
        if raw.is_empty() || total <= 0.0 {
            return Err(Error::Coverage(x));
        }
        let grad_total = raw.iter().fold(Point2::new(0.0, 0.0), |acc, e| acc + e.2);
        Ok(raw
            .into_iter()
            .map(|(id, psi, g)| {
                let phi = psi / total;
                (id, phi, (g - grad_total * phi) * (1.0 / total))
            })
            .collect())
    }

    /// Number of cells with `x ∈ T·B_{i,j}`.
    pub fn overlap_count(&self, x: Point2, t: f64) -> Result<usize> {
        let d = self.check_point(x)?;
        Ok(self.cells_within(x, d, t).len())
    }

    /// Largest level difference among the doubled balls containing `x`.
    pub fn level_spread(&self, x: Point2) -> Result<i32> {
        let d = self.check_point(x)?;
        let levels: Vec<i32> = self.cells_within(x, d, 2.0).iter().map(|&id| self.cells[id].level).collect();
        Ok(levels.iter().max().unwrap_or(&0) - levels.iter().min().unwrap_or(&0))
    }

    /// Exact check that the generating squares are pairwise disjoint: no two
    /// share a key and no accepted square has an accepted ancestor.
    pub fn check_disjoint(&self) -> bool {
        let keys: HashSet<(i32, i64, i64)> =
            self.cells.iter().map(|c| (c.level, c.ix, c.iy)).collect();
        if keys.len() != self.cells.len() {
            return false;
        }
        self.cells.iter().all(|c| {
            let (mut level, mut ix, mut iy) = (c.level, c.ix, c.iy);
            while level > self.root_level {
                level -= 1;
                ix = ix.div_euclid(2);
                iy = iy.div_euclid(2);
                if keys.contains(&(level, ix, iy)) {
                    return false;
                }
            }
            true
        })
    }

    pub fn rows(&self) -> Vec<CellRow> {
        self.cells
            .iter()
            .map(|c| CellRow { i: c.level, j: c.index, x: c.center.x, y: c.center.y, r: c.radius })
            .collect()
    }

    /// Point of `B` drawn uniformly among those farther than the resolution
    /// from `E` (and, for the snowflake surrogate, anywhere off `K_n`).
    pub fn random_valid_point<R: Rng>(&self, rng: &mut R) -> Point2 {
        loop {
            let r = self.ball.radius * rng.gen::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.gen::<f64>();
            let x = self.ball.center + Point2::new(r * t.cos(), r * t.sin());
            if self.fractal.distance(x) > self.resolution() {
                return x;
            }
        }
    }
}

/// Empirical overlap statistics over random probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapStat {
    pub t: f64,
    pub n_probe: usize,
    /// `max Σ χ_{T·B_{i,j}}`.
    pub n_t: usize,
    /// `1 + max |i − m|` over doubled balls sharing a probe.
    pub n1: i32,
    /// Largest number of nonzero partition weights.
    pub n2: usize,
}

pub fn overlap_stat(cover: &WhitneyCover, t: f64, n_probe: usize, seed: u64) -> Result<OverlapStat> {
    if !(t >= 1.0) {
        return Err(Error::InvalidInput(format!("dilation T = {t} must be at least 1")));
    }
    let mut rng = stream(seed, 0);
    let mut stat = OverlapStat { t, n_probe, n_t: 0, n1: 0, n2: 0 };
    for _ in 0..n_probe {
        let x = cover.random_valid_point(&mut rng);
        stat.n_t = stat.n_t.max(cover.overlap_count(x, t)?);
        stat.n1 = stat.n1.max(cover.level_spread(x)? + 1);
        stat.n2 = stat.n2.max(cover.partition_eval(x)?.len());
    }
    Ok(stat)
}

/// `max |φ_{i,j}(x) − φ_{i,j}(y)| / (|x − y|·2^i)` over random pairs at
/// distance `≤ 2^{-max_level}`; an empirical constant `C` in `Lip φ ≤ C·2^i`.
pub fn partition_lipschitz_stat(cover: &WhitneyCover, n_pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, 1);
    let h = side(cover.max_level);
    let mut c: f64 = 0.0;
    let mut done = 0;
    while done < n_pairs {
        let x = cover.random_valid_point(&mut rng);
        let t = std::f64::consts::TAU * rng.gen::<f64>();
        let y = x + Point2::new(h * t.cos(), h * t.sin()) * rng.gen::<f64>();
        let (wx, wy) = match (cover.partition_eval(x), cover.partition_eval(y)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        done += 1;
        let lookup = |w: &PartitionWeights, id: usize| {
            w.entries.iter().find(|e| e.0 == id).map(|e| e.1).unwrap_or(0.0)
        };
        let dist = x.dist(y);
        for &(id, _) in wx.entries.iter().chain(wy.entries.iter()) {
            let q = (lookup(&wx, id) - lookup(&wy, id)).abs() / dist * cover.cells[id].radius;
            c = c.max(q);
        }
    }
    Ok(c)
}
