use thiserror::Error;

/// A single rejected line-list row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source text (the header is line 1).
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid population: {0}")]
    Population(String),

    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error("invalid outbreak: {0}")]
    Outbreak(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("infeasible arrangement: {balls} balls into {boxes} boxes of capacity {capacity}")]
    InfeasibleArrangement { balls: u64, boxes: usize, capacity: u64 },

    #[error("null model is not admissible for this outbreak")]
    NullInadmissible,

    #[error("model fit failed: {0}")]
    FitFailed(String),

    #[error("{failed} of {total} replicates failed")]
    ReplicateFailures { failed: usize, total: usize },

    #[error("simulation produced no infections after {0} attempts")]
    NoInfections(u64),

    #[error("line list rejected:\n{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    LineList(Vec<RowError>),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
