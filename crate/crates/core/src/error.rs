use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} outside the schedule window [{lo}, {hi}]")]
    WindowExceeded { t: f64, lo: f64, hi: f64 },

    #[error("invalid schedule at index {index}: {reason}")]
    InvalidSchedule { index: i64, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("non-finite state after t = {t_last} (interval {interval})")]
    BlowUp { interval: i64, t_last: f64 },

    #[error("anchor iteration on interval {interval} did not contract after {iterates} iterates (ratios {ratios:?})")]
    NonContraction {
        interval: i64,
        iterates: usize,
        ratios: Vec<f64>,
    },

    #[error("eigenvalue with positive real part {re} (tolerance {tol})")]
    PositiveSpectrum { re: f64, tol: f64 },

    #[error("block-diagonalising transform is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("smallness condition violated: {0}")]
    SmallnessViolated(String),

    #[error("Picard iteration diverged after {iterates} iterates (deltas {deltas:?})")]
    Divergence { iterates: usize, deltas: Vec<f64> },

    #[error("fixed-point iterate left the admissible ball: distance {distance} > radius {radius}")]
    ContractionFailure { distance: f64, radius: f64 },

    #[error("coordinate {value} outside the cached box [-{half_width}, {half_width}]")]
    BoxExceeded { value: f64, half_width: f64 },

    #[error("degenerate dimension: {0}")]
    DegenerateDimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
