use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: column `{column}`: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    BadFile { path: PathBuf, message: String },

    #[error("duplicate researcher id `{0}`")]
    DuplicateResearcher(String),

    #[error("researcher `{researcher}` has unknown SDS `{sds}`")]
    UnknownSds { researcher: String, sds: String },

    #[error("no salary for rank `{0}` in the salary schedule")]
    MissingRank(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no citation baseline for year {year}, category `{category}`")]
    MissingBaseline { year: i32, category: String },

    #[error("author position {position} outside byline of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("non-positive labor input for `{unit}`: {detail}")]
    NonPositiveInput { unit: String, detail: String },

    #[error("no positive national mean of `{indicator}` for SDS `{sds}`")]
    MissingFieldMean { indicator: String, sds: String },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("ranking needs at least one entry")]
    EmptyRanking,

    #[error(
        "ranked lists cover different units; only in first: {}; only in second: {}",
        preview(only_a),
        preview(only_b)
    )]
    UnitMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },

    #[error("invalid DMU `{id}`: {reason}")]
    InvalidDmu { id: String, reason: String },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("DEA program for DMU `{id}` failed")]
    Dea {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Whether the error stems from bad input data rather than a failed
    /// computation over valid data.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Malformed { .. }
                | Error::BadFile { .. }
                | Error::DuplicateResearcher(_)
                | Error::UnknownSds { .. }
                | Error::MissingRank(_)
                | Error::InvalidCorpus(_)
                | Error::InvalidParameter(_)
                | Error::UnitMismatch { .. }
                | Error::InvalidDmu { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// At most five ids, then a count of the rest.
fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 5;
    if ids.is_empty() {
        return "none".into();
    }
    let head = ids[..ids.len().min(SHOWN)].join(", ");
    if ids.len() > SHOWN {
        format!("{head} and {} more", ids.len() - SHOWN)
    } else {
        head
    }
}
