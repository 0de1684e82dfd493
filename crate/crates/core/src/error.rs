use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// No sample in `lower` ever beat any sample in `upper`, so the
    /// likelihood has no finite maximizer.
    #[error("vote graph is not strongly connected: samples {lower:?} never beat samples {upper:?}")]
    Disconnected { lower: Vec<usize>, upper: Vec<usize> },

    #[error("sample {sample} has no wins; its strength has no positive finite estimate")]
    ZeroWins { sample: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("record {record}: {message}")]
    Record { record: u64, message: String },

    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
