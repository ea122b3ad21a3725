//! File formats, run configuration, result documents, the benchmark harness
//! and the `select_frames` entry point shared by the CLI and language bindings.

pub mod api;
pub mod bench;
pub mod config;
pub mod format;
pub mod report;

use std::path::PathBuf;

pub use api::{select_embeddings, select_frames, StdClock};
pub use config::RunConfig;
pub use format::{read_embeddings, write_embeddings, Embeddings, FileFormat};
pub use report::{ErrorDocument, ResultDocument};

/// Engine version recorded in every document.
pub const ENGINE_VERSION: &str = framesel_core::VERSION;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] framesel_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Engine(e) if e.is_numerical() => "numerical",
            Error::Engine(_) => "invalid_input",
            Error::Json(_) => "document",
        }
    }

    /// 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Engine(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
