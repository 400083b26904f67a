use ipad_core::data::image::ImageError;
use ipad_core::IpadError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Solver(IpadError),
}

impl CliError {
    /// Process exit code: 1 for bad configuration, 2 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) | CliError::Solver(_) => 1,
        }
    }
}

impl From<IpadError> for CliError {
    fn from(e: IpadError) -> Self {
        match e {
            IpadError::Config(msg) => CliError::Config(msg),
            IpadError::Image(e @ (ImageError::TooSmall { .. } | ImageError::Dimensions(_))) => {
                CliError::Config(e.to_string())
            }
            // Unreadable or undecodable input files.
            IpadError::Image(e) => CliError::Io(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        CliError::from(IpadError::Image(e))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(format!("malformed trace: {e}")),
        }
    }
}
