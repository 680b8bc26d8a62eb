use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    CoordOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the bounding radius {radius}")]
    OutsideWindow { radius: f64 },

    #[error("no boundary found within the bounding radius")]
    NoBoundary,

    #[error("base point is not in the domain")]
    NotInDomain,

    #[error("base point lies in the domain")]
    InDomain,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog domain `{0}`")]
    UnknownCatalog(String),

    #[error("field is not smooth at the requested point")]
    NonSmooth,

    #[error("gradient vanishes at the requested point")]
    VanishingGradient,

    #[error("analytic disk is not contained in the domain")]
    DiskNotContained,

    #[error("function is infinite on {bad} of {total} circle points; shrink the radius")]
    CircleGrazesBoundary { bad: usize, total: usize },

    #[error("empty sampling region: {0}")]
    EmptyRegion(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("boundary point data is missing a tangent frame (non-smooth point)")]
    MissingFrame,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
