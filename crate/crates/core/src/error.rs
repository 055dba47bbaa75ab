use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: max asymmetry {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site dimensions multiply to {product} but the operator has dimension {dim}")]
    Factorization { product: usize, dim: usize },

    #[error("invalid site block: {0}")]
    InvalidBlock(String),

    #[error("block size {k} does not divide chain length {length}")]
    BlockSize { k: usize, length: usize },

    #[error("particle count {particles} exceeds chain length {length}")]
    ParticleCount { particles: usize, length: usize },

    #[error("{model} model is incompatible with sector {sector}")]
    IncompatibleSector { model: String, sector: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("spectrum has zero width (E_N = E_1 = {0}); default inverse temperature undefined")]
    DegenerateSpectrum(f64),

    #[error("probabilities sum to {sum} (deficit {deficit:e})")]
    Normalization { sum: f64, deficit: f64 },

    #[error("infeasible bounds: {0}")]
    Infeasible(String),

    #[error("empty measurement set")]
    EmptyMeasurementSet,

    #[error("time grid with {points} points supplied for a target that is not conserved")]
    TimeSweepNotAllowed { points: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
