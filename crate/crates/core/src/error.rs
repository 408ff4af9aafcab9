use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("twice_spin must be at least 1, got {0}")]
    InvalidSpin(u32),

    #[error("expected {expected} amplitudes for twice_spin = {twice_spin}, got {got}")]
    LengthMismatch {
        twice_spin: u32,
        expected: usize,
        got: usize,
    },

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: twice_spin {0} vs {1}")]
    DimensionMismatch(u32, u32),

    #[error("projection 2m = {twice_m} is not valid for 2j = {twice_j}")]
    InvalidProjection { twice_j: i32, twice_m: i32 },

    #[error("dense oracle supports twice_spin <= {max}, got {got}")]
    DenseCapExceeded { max: u32, got: u32 },

    #[error("tolerance {0} outside the open interval (0, 0.1)")]
    ToleranceOutOfRange(f64),

    #[error("constellation has {got} stars, expected {expected}")]
    StarCount { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed state file: {0}")]
    Format(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
