use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("floating subnetwork: nodes {nodes:?} have no conductive path to ground")]
    FloatingSubnetwork { nodes: Vec<String> },

    #[error("ill-conditioned network: pivot {pivot:e} below tolerance (condition estimate {condition:e})")]
    IllConditioned { pivot: f64, condition: f64 },

    #[error("feature assembly: component {index} ({symbol}) is missing")]
    MissingComponent { index: usize, symbol: &'static str },

    #[error("degenerate model for class {label}: {reason}")]
    DegenerateModel { label: String, reason: String },

    #[error("insufficient training data for class {label}: K = {k}, need at least {needed}")]
    InsufficientData { label: String, k: usize, needed: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through any `Context` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
