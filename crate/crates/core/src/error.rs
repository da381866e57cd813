use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no realizations")]
    NoRealizations,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("undefined correction: need at least 2 realizations, got {0}")]
    UndefinedCorrection(u64),

    #[error("degenerate shell: variance is zero")]
    DegenerateShell,

    #[error("no perpendicular dimensions: N={n} must exceed L={l}")]
    NoPerpendicularDimensions { n: usize, l: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient history: {0} comparisons, need at least 2")]
    InsufficientHistory(u64),

    #[error("too few clusters: {0}, need at least 2")]
    TooFewClusters(usize),

    #[error("no spatial spread: all kriging sites coincide")]
    NoSpatialSpread,

    #[error("degenerate site geometry: kriging system is singular")]
    DegenerateSiteGeometry,

    #[error("reference not frozen: warm-up incomplete")]
    ReferenceNotFrozen,

    #[error("unsupported model schema {found}, expected {expected}")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("bad input data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
