use crate::geometry::Point2;

/// Errors raised by the library. Numerical outcomes such as divergence or an
/// exhausted budget are not errors; they travel as a [`crate::Status`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("point ({}, {}) lies below the cover resolution", .0.x, .0.y)]
    Resolution(Point2),
    #[error("point ({}, {}) is not covered by any Whitney ball", .0.x, .0.y)]
    Coverage(Point2),
    #[error("no boundary samples fall in the averaging ball of Whitney cell {0}")]
    EmptyAverage(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
