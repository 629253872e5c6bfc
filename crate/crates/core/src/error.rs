use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("macro series does not cover {date}: first observation is {first}")]
    Coverage {
        date: chrono::NaiveDate,
        first: chrono::NaiveDate,
    },

    #[error("panel is empty after filtering to years {0}..={1}")]
    EmptyPanel(i32, i32),

    #[error("feature frame is empty: every row was dropped by missing lag/lead/rolling values")]
    EmptyFrame,

    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design matrix is rank deficient; dependent columns: {}", .columns.join(", "))]
    Collinear { columns: Vec<String> },

    #[error("insufficient data: {n_obs} observations for {n_params} parameters")]
    InsufficientData { n_obs: usize, n_params: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the CLI: 2 config/argument, 3 data
    /// validation, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) => 2,
            Error::DegenerateVariance
            | Error::NumericalSingularity(_)
            | Error::Collinear { .. }
            | Error::InsufficientData { .. } => 4,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Coverage { .. }
            | Error::EmptyPanel(..)
            | Error::EmptyFrame
            | Error::UnknownTicker(_)
            | Error::Io { .. }
            | Error::Csv(_) => 3,
        }
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
