use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("singular matrix ({class}) at pivot {pivot}")]
    Singular { class: String, pivot: usize },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("format error: {message} at offset {offset}")]
    Format { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn shape(message: impl Into<String>) -> Self {
        Error::Shape(message.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Model(_)
            | Error::Grid(_)
            | Error::Geometry(_)
            | Error::DegeneratePartition(_) => 2,
            Error::Io(_) | Error::Format { .. } => 4,
            _ => 3,
        }
    }
}
