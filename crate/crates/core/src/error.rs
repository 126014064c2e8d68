use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("requested rank {requested} exceeds detected numerical rank {detected}")]
    Rank { requested: usize, detected: usize },

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("{op}: system is singular within tolerance (condition estimate {condition:e}){hint}")]
    Singular {
        op: &'static str,
        condition: f64,
        hint: &'static str,
    },

    #[error("{op}: no convergence after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    #[error("format error at byte offset {offset}: {detail}")]
    Format { offset: u64, detail: String },

    #[error("infeasible density {density}: {detail}")]
    Infeasible { density: f64, detail: String },

    #[error("allocation error: {0}")]
    Allocation(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("layer {layer}: {source}")]
    Layer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn at_layer(self, layer: usize) -> Self {
        Error::Layer {
            layer,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Shape { .. } | Error::Infeasible { .. } | Error::Invalid(_) | Error::Allocation(_) => {
                ErrorClass::Validation
            }
            Error::Rank { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::Singular { .. }
            | Error::NoConvergence { .. } => ErrorClass::Numerical,
            Error::Format { .. } | Error::File { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => ErrorClass::Io,
            Error::Layer { source, .. } => source.class(),
        }
    }
}
