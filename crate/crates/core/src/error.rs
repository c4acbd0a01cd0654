use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("plateau at unitation {at}: g({at}) == g({next})", next = .at + 1)]
    Plateau { at: usize },

    #[error("invalid monotonicity profile: {0}")]
    Profile(String),

    #[error("insufficient sample: need at least {needed} individuals, got {actual}")]
    InsufficientSample { needed: usize, actual: usize },

    #[error("gene index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dependent pairs are stochastically independent (q~ = 1/4); no population size separates them")]
    Undecidable,

    #[error("relative entropy is infinite (p = {p}, q = {q})")]
    InfiniteDivergence { p: f64, q: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
