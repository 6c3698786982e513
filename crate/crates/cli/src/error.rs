use thiserror::Error;

use klnmf::io::FormatError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File { path: String, source: FormatError },
    #[error(transparent)]
    Solver(#[from] klnmf::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::File { .. } => EXIT_IO,
            CliError::Solver(e) => match e {
                klnmf::Error::NumericalFailure { .. } => EXIT_NUMERICAL,
                klnmf::Error::Format(_) | klnmf::Error::EmptyData => EXIT_IO,
                _ => EXIT_USAGE,
            },
        }
    }
}

pub fn file_error(path: &std::path::Path) -> impl FnOnce(FormatError) -> CliError + '_ {
    move |source| CliError::File {
        path: path.display().to_string(),
        source,
    }
}
