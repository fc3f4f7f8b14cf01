use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("payoff g({row},{col}) has norm {norm:.6} > 1; rescale or pass --rescale")]
    Normalization { row: String, col: String, norm: f64 },
    #[error("invalid mixed action: {0}")]
    InvalidMixed(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
    #[error("history is already absorbed at stage {0}")]
    Absorbed(usize),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("target set is empty")]
    EmptyTarget,
    #[error("iteration limit exceeded in {0}")]
    IterationLimit(&'static str),
    #[error("grid too large: {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("condition not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("evaluation: {0}")]
    Evaluation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
