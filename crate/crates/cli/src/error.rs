use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Numerical {
        context: &'static str,
        #[source]
        source: solqm_core::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for anything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } | CliError::Io { .. } => 3,
        }
    }

    pub fn numerical(context: &'static str) -> impl FnOnce(solqm_core::Error) -> Self {
        move |source| CliError::Numerical { context, source }
    }
}
