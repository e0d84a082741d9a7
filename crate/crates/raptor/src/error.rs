use std::io;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] raptor_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    /// Malformed binary file; `offset` is the byte position of the fault.
    #[error("{path}: format error at byte {offset}: {message}")]
    Format { path: String, offset: u64, message: String },
    /// Malformed text file; `line` is one-based.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    /// Replaces the path of a format error decoded from memory.
    pub fn at_path(self, path: &Path) -> Self {
        match self {
            Error::Format { offset, message, .. } => {
                Error::Format { path: path.display().to_string(), offset, message }
            }
            other => other,
        }
    }

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format { path: "<memory>".into(), offset, message: message.into() }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
