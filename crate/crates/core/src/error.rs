use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("format error: {0}")]
    Format(String),
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(
        "index ({target}, {source_index}) out of range for {n_targets}x{n_sources} dissimilarity"
    )]
    Bounds {
        target: usize,
        source_index: usize,
        n_targets: usize,
        n_sources: usize,
    },
    #[error("dissimilarity {value} exceeds 1; normalization constant too small")]
    Normalization { value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("problem too large: {0}")]
    Size(String),
    #[error("labels required: {0}")]
    Label(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
