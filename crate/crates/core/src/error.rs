use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} entries, found {found}")]
    Alignment { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("no prediction for example id `{0}`")]
    MissingPrediction(String),

    #[error("duplicate example id `{0}`")]
    DuplicateExample(String),

    #[error("round cap of {cap} exceeded with disagreement mass {mass}")]
    RoundCapExceeded { cap: usize, mass: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_aligned(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Alignment { expected, found })
    }
}
