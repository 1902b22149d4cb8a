use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {0} is outside the universe of size {1}")]
    OutsideUniverse(usize, usize),

    #[error("point ({t}, {x}) is outside the {nt}x{nx} lattice")]
    PointOutOfRange { t: i64, x: i64, nt: usize, nx: usize },

    #[error("lattice mismatch: {0}x{1} vs {2}x{3}")]
    LatticeMismatch(usize, usize, usize, usize),

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("series order caps differ: {0} vs {1}")]
    CapMismatch(usize, usize),

    #[error("leading series coefficient is not the unit")]
    NotUnit,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("relation invariant violated: {0}")]
    InvalidStructure(String),

    #[error("no separating time slab: need {required} empty rows between the regions, found {found}")]
    NoSeparatingSlab { required: usize, found: i64 },

    #[error("insufficient polarization family: need {required} diagonal extractions, have {available}")]
    InsufficientFamily { required: usize, available: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
