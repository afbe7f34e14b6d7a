use thiserror::Error;

pub type Result<T> = std::result::Result<T, FpError>;

#[derive(Debug, Error)]
pub enum FpError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Zero pivot during tridiagonal elimination (0-based row).
    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },

    #[error("config line {line}: {message} (`{content}`)")]
    Config {
        line: usize,
        content: String,
        message: String,
    },

    #[error("inversion stalled after {iterations} iterations (bracket [{lo}, {hi}])")]
    Stalled { iterations: usize, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FpError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, FpError::SingularPivot { .. } | FpError::Stalled { .. })
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        FpError::InvalidParameter(msg.into())
    }
}
