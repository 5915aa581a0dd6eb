use std::fmt;

/// Errors produced by the simulation, sensing and recovery layers.
#[derive(Debug, Clone)]
pub enum Error {
    /// Invalid configuration (bad grid, aperture larger than the grid, broken
    /// geometry constraint, ...).
    Config(String),
    /// Array length or axis mismatch between two objects that must agree.
    Shape(String),
    /// The Fresnel sampling criterion is violated for a grid pair.
    Aliasing(String),
    /// Invalid numeric data (negative intensity, non-finite value, ...).
    Data(String),
    /// Detector pixels cannot be mapped onto a common frequency axis.
    Alignment(String),
    /// A sensing mode was asked to use data it does not have.
    Mode(String),
    /// An input violates a structural requirement (e.g. non-Hermitian matrix).
    Consistency(String),
    /// Not enough samples for an ensemble statistic.
    Statistics(String),
    /// The iterative solver failed; the objective trace up to the failure is attached.
    Solver { message: String, trace: Vec<f64> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Aliasing(msg) => write!(f, "aliasing error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Alignment(msg) => write!(f, "alignment error: {msg}"),
            Error::Mode(msg) => write!(f, "mode error: {msg}"),
            Error::Consistency(msg) => write!(f, "consistency error: {msg}"),
            Error::Statistics(msg) => write!(f, "statistics error: {msg}"),
            Error::Solver { message, trace } => {
                write!(f, "solver failure: {message} ({} iterations recorded)", trace.len())
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
