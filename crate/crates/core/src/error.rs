use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or signal dimensions do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar or structural argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Operation requires a stable model (spectral radius < 1).
    #[error("model is not stable: spectral radius {radius}")]
    UnstableModel { radius: f64 },

    /// A horizon or block-row count exceeds the available data.
    #[error("{what}: requested {requested}, available {available}")]
    TooShort {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    /// Snapshot window falls outside the trajectory.
    #[error("window [{start}, {end}) out of range for trajectory of length {len}")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    /// A supply-rate block pair violates the transpose symmetry relation.
    #[error("supply rate blocks ({i},{j}) and ({j},{i}) are not transposes of each other")]
    BlockSymmetry { i: usize, j: usize },

    /// The numerical null space of the constrained data matrix is empty.
    #[error(
        "numerical null space of the constrained data matrix ({rows}x{cols}) is empty{advice}"
    )]
    EmptyNullspace {
        rows: usize,
        cols: usize,
        advice: String,
    },

    /// NaN or infinity encountered where finite data is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
