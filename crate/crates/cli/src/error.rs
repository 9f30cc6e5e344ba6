use std::path::Path;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Data(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Check(_) => EXIT_CHECK,
        }
    }
}

/// Library errors surfacing here come from files or data; configuration
/// problems are caught before the library is called.
impl From<twoem_core::Error> for CliError {
    fn from(e: twoem_core::Error) -> Self {
        match e {
            twoem_core::Error::InvalidConfig(msg) => Self::Usage(msg),
            other => Self::Data(other.to_string()),
        }
    }
}
