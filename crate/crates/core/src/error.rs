use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("collision at t={time:.3}s: vehicle {follower} ran into vehicle {leader} (gap {gap:.3} m)")]
    Collision { time: f64, follower: usize, leader: usize, gap: f64 },

    /// A run stopped early; `partial` holds everything recorded up to the
    /// failing tick.
    #[error("run aborted: {cause}")]
    RunAborted { cause: Box<Error>, partial: Box<crate::dataset::TrajectoryDataset> },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("scenario parse error: {0}")]
    ScenarioParse(#[from] toml::de::Error),

    #[error("scenario serialize error: {0}")]
    ScenarioSerialize(#[from] toml::ser::Error),
}

impl Error {
    /// The underlying error, looking through [`Error::RunAborted`].
    pub fn root(&self) -> &Error {
        match self {
            Error::RunAborted { cause, .. } => cause.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
