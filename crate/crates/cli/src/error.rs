use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// A replayed run produced different bytes.
    pub const REPLAY_MISMATCH: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: ipa_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("replay differs from the recorded run: {0:?}")]
    ReplayMismatch(Vec<String>),
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(ipa_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        use ipa_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::ReplayMismatch(_) => exit::REPLAY_MISMATCH,
            CliError::Core { source, .. } => match source.root() {
                E::InvalidArgument(_) => exit::CONFIG,
                E::Io(_) => exit::IO,
                E::Shape(_)
                | E::InsufficientLength { .. }
                | E::NonFinite { .. }
                | E::Format(_)
                | E::NoGroundTruth(_)
                | E::DegenerateCoordinate { .. }
                | E::Json(_) => exit::DATA,
                E::Unstable { .. }
                | E::IllConditioned { .. }
                | E::Conditioning { .. }
                | E::NotWhite { .. }
                | E::NoConvergence { .. }
                | E::TooManyComponents { .. }
                | E::DegenerateBlock { .. } => exit::NUMERICAL,
                E::Stage { .. } => unreachable!("root skips stage wrappers"),
            },
        }
    }

    /// A suggestion printed under the error, when one applies.
    pub fn hint(&self) -> Option<&'static str> {
        use ipa_core::Error as E;
        let CliError::Core { source, .. } = self else {
            return None;
        };
        Some(match source.root() {
            E::IllConditioned { .. } => "lower max_ar_order or use selection \"bic\"",
            E::Conditioning { .. } => "keep fewer dimensions: set dim_rule to {\"fixed\": k} or \"eigen-gap\"",
            E::NoConvergence { .. } => "raise ica_max_sweeps or loosen ica_tol",
            E::TooManyComponents { .. } => "raise the k_rule bound or use the abs-corr estimator",
            E::InsufficientLength { .. } => "provide a longer series or lower max_ar_order",
            E::Unstable { .. } => "the AR part of the system must have spectral radius below 1",
            E::NoGroundTruth(_) => "evaluate needs a dataset written by `ipa simulate`",
            E::Shape(m) if m.contains("dim_rule") => "pass a config with dim_rule {\"fixed\": D_e}",
            _ => return None,
        })
    }
}
