//! File formats and command implementations behind the `hydrec` binary.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod args;
pub mod commands;
pub mod format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hydrec::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("missing reference: {0}")]
    MissingReference(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 0 success, 2 simulation quality, 3 insufficient time samples,
    /// 4 missing reference, 1 everything else.
    pub fn exit_code(&self) -> i32 {
        use hydrec::Error as E;
        match self {
            CliError::Core(E::NormDrift { .. } | E::WrapAround { .. } | E::GridTooNarrow { .. }) => 2,
            CliError::Core(E::InsufficientTimeSamples { .. }) => 3,
            CliError::MissingReference(_) => 4,
            _ => 1,
        }
    }
}

/// Applies `HYDREC_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HYDREC_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("HYDREC_THREADS must be a positive integer, got {value:?}")))?;
    if threads == 0 {
        return Err(CliError::Usage("HYDREC_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}
