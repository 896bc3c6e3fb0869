use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("variable `{0}` has fewer than two distinct values")]
    DegenerateVariable(String),
    #[error("stratum `{stratum}` has {count} subject(s); at least 2 are required")]
    StratumTooSmall { stratum: String, count: usize },
    #[error("no case subjects at prediction timestep {0}")]
    EmptyStratum(usize),
    #[error("no rankable variables: every candidate is degenerate")]
    NoRankableVariables,
    #[error("empty input after dropping missing values")]
    EmptyInput,
    #[error("parent configuration space {size} exceeds cap {cap} for node `{node}`")]
    ParentSpaceTooLarge { node: String, size: usize, cap: usize },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("inconsistent evidence{}", .subject.as_ref().map(|s| format!(" for subject `{s}`")).unwrap_or_default())]
    InconsistentEvidence { subject: Option<String> },
    #[error("largest clique has {size} states, cap is {cap}")]
    TreewidthTooLarge { size: u128, cap: u128 },
    #[error("query at timestep {requested} exceeds horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },
    #[error("joint state space {size} exceeds oracle limit {limit}")]
    OracleTooLarge { size: u128, limit: u128 },
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("bootstrap unstable: {degenerate} of {attempts} resamples were single-class")]
    UnstableBootstrap { degenerate: usize, attempts: usize },
    #[error("logistic regression did not converge in {0} iterations")]
    ConvergenceFailure(usize),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("missing data where complete data is required: {0}")]
    MissingData(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
