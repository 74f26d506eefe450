use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unsupported root system {family}{rank}")]
    UnsupportedRootSystem { family: String, rank: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    /// A level violates `m ∈ eℕ, and m > e if p = 2`.
    #[error(
        "inadmissible level {level} for p = {p}, e = {e}: requires m ∈ eℕ, and m > e if p = 2"
    )]
    InadmissibleLevel { level: i64, p: u64, e: u64 },

    #[error("filtration shapes belong to different group profiles")]
    ProfileMismatch,

    #[error("restriction target level {target} is shallower than source level {source_level}")]
    LevelOrder { source_level: i64, target: i64 },

    #[error("degree {degree} out of range 0..={max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("block index exceeds factor dimension: {0}")]
    BlockOutOfRange(String),

    #[error("invalid transition query: {0}")]
    InvalidQuery(String),

    /// The symbolic all-z argument needs `n′ ≥ n + e`.
    #[error(
        "gap n′ - n = {gap} is below a full p-power step e = {e}; evaluate per cocharacter instead"
    )]
    GapBelowPowerStep { gap: i64, e: u64 },

    #[error("series outside its convergence domain: valuation {valuation} < {required}")]
    ConvergenceDomain { valuation: i32, required: i32 },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is singular")]
    Singular,

    #[error("sampler failed: {0}")]
    Sampler(String),

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("malformed catalog: {0}")]
    Catalog(String),
}
