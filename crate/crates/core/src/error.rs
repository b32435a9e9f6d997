use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {axis} must be at least 1")]
    Domain { axis: &'static str },

    #[error("tile {axis}={tile} does not evenly tile dimension {dim}")]
    Tiling {
        axis: &'static str,
        dim: u64,
        tile: u64,
    },

    #[error("reduction ratio for {field} is undefined: baseline count is zero")]
    UndefinedRatio { field: &'static str },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("value {value} is outside the {bits}-bit operand range")]
    Precision { value: i64, bits: u32 },

    #[error("{buffer} buffer needs {needed} bytes but holds {capacity}")]
    BufferCapacity {
        buffer: &'static str,
        needed: u64,
        capacity: u64,
    },

    #[error("invalid LUT range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("row is empty")]
    EmptyRow,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
