use thiserror::Error;

/// Crate-wide error type.
///
/// Variants split into two broad groups: malformed *input* (data files,
/// sample matrices, degenerate data) and invalid *configuration* (test
/// parameters, kernel parameters, design parameters). The CLI maps these
/// groups to distinct exit codes via [`Error::is_config`].
#[derive(Debug, Error)]
pub enum Error {
    // --- input errors ---
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{context}: need at least {needed} samples, got {got}")]
    InsufficientSamples {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("point outside the unit cube at coordinate {coordinate}: {value}")]
    OutOfDomain { coordinate: usize, value: f64 },

    #[error("malformed numeric field {field:?} at row {row}")]
    MalformedNumber { row: usize, field: String },

    #[error("empty data matrix")]
    EmptyMatrix,

    #[error("ragged rows: row {row} has {got} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    // --- configuration errors ---
    #[error("bandwidth must be strictly positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("IMQ exponent must lie in (0, 1), got {0}")]
    InvalidExponent(f64),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("bandwidth collection is empty: {0}")]
    EmptyCollection(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // --- wrapped ---
    #[error("repetition {repetition} (seed {seed}): {source}")]
    Repetition {
        repetition: usize,
        seed: u64,
        source: Box<Error>,
    },
}

impl Error {
    /// True when the error stems from test/kernel/design configuration
    /// rather than from the data handed in.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidBandwidth(_)
            | Error::InvalidExponent(_)
            | Error::InvalidDesign(_)
            | Error::InvalidLevel(_)
            | Error::InvalidWeights(_)
            | Error::EmptyCollection(_)
            | Error::InvalidConfig(_) => true,
            Error::Repetition { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
