use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mass must be nonnegative, got {0}")]
    NegativeMass(f64),

    #[error("degenerate spinor: zero mass at zero momentum has no rest frame")]
    DegenerateSpinor,

    #[error("modes come from different momentum grids")]
    GridMismatch,

    #[error("wave vector {0:?} is not commensurate with the box")]
    NonCommensurate([f64; 3]),

    #[error("wave vector index {k:?} exceeds the band limit {band}")]
    BandLimit { k: [i32; 3], band: i32 },

    #[error("amplitudes violate the reality condition at k = {0:?}")]
    Reality([i32; 3]),

    #[error("envelope must vanish with zero slope at t = 0 (g(0) = {value}, g'(0) = {slope})")]
    EnvelopeInitialCondition { value: f64, slope: f64 },

    #[error("operator is not hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{modes} modes exceed the Fock-space cap of {cap}")]
    FockCapExceeded { modes: usize, cap: usize },

    #[error("mode {0} is not in the catalog")]
    UnknownMode(String),

    #[error("invalid mode selection: {0}")]
    InvalidModes(String),

    #[error("point {0:?} lies outside the box")]
    OutsideBox([f64; 3]),

    #[error("time series needs at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
