//! Weighted measures `dist(x, E)^α dx` around planar fractals (Sierpiński
//! carpet, Sierpiński gasket, von Koch snowflake), checks of the structural
//! hypotheses they satisfy, and numerical realizations of the Whitney
//! extension operator, the trace operator and the fractional maximal function.
//!
//! The crate is organized by layer:
//!
//! * [`geometry`]: distance oracles, membership, IFS addressing.
//! * [`measures`]: closed forms, interval quadrature, the boundary measure ν.
//! * [`regularity`]: doubling / A_p / codimension / shell surveys.
//! * [`whitney`]: Whitney cover and its Lipschitz partition of unity.
//! * [`operators`]: extension `Su`, averaged trace, fractional maximal function.
//! * [`energies`]: Besov and weighted Sobolev energies and norm-ratio experiments.

pub mod energies;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod operators;
pub mod regularity;
pub mod rng;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{
    Address, Ball, Fractal, FractalKind, FractalSpec, IntervalValue, Point2, Region, Square,
    Status,
};
pub use measures::{MeasureEstimate, WeightParams};
