use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent inputs (shape mismatches, bad parameter ranges, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Geometry that leaves a formula undefined (e.g. zero spread in pairwise distances).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A metric period that cannot be evaluated (e.g. zero mean of shifted errors).
    #[error("degenerate period: {0}")]
    DegeneratePeriod(String),

    /// Forecaster training produced a non-finite loss.
    #[error("training diverged at iteration {iteration}: {message}")]
    Training { iteration: usize, message: String },

    /// Linear program has no feasible point.
    #[error("infeasible program: {0}")]
    Infeasible(String),

    /// Linear program objective is unbounded below; for MIVR inputs this is a formulation bug.
    #[error("unbounded program: {0}")]
    Unbounded(String),

    /// Scenario configuration problems (missing files, out-of-range parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// Row-level data errors; `line` is the 1-based line number in the source file.
    #[error("data error at line {line}: {message}")]
    Data { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Pipeline errors tagged with the stage that produced them.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn data(line: u64, msg: impl Into<String>) -> Self {
        Error::Data {
            line,
            message: msg.into(),
        }
    }

    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
