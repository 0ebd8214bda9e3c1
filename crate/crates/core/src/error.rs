use std::fmt;
use std::path::PathBuf;

/// Which half of a co-clustering pipeline an error or estimate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Sending pattern (rows of each adjacency matrix).
    Row,
    /// Receiving pattern (columns of each adjacency matrix).
    Column,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Row => f.write_str("row"),
            Side::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("eigensolver did not converge (achieved residual {residual:e}, target {target:e})")]
    NoConvergence { residual: f64, target: f64 },

    #[error("rank deficiency at vertex-hunting step {step}: max residual row norm {max_norm:e}")]
    RankDeficient { step: usize, max_norm: f64 },

    #[error("vertex submatrix is singular or ill-conditioned (condition number {condition:e})")]
    SingularVertices { condition: f64 },

    #[error("{side} side: {source}")]
    OnSide {
        side: Side,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no edges in input")]
    NoEdges,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid merge specification: {0}")]
    InvalidMerge(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn on_side(self, side: Side) -> Error {
        Error::OnSide {
            side,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
