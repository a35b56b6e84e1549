//! File formats, configuration, and command implementations behind the
//! `prmlab` binary.
//!
//! Every command is a pure function of `(config, seed, input files)`:
//! reruns with the same inputs produce byte-identical primary outputs.
//! The only exception is the `timing.json` diagnostic sidecar, which is
//! explicitly excluded from the determinism contract.

pub mod commands;
pub mod config;
pub mod formats;
pub mod rundir;

use prmlab_core::Error as CoreError;

/// Errors surfaced by the CLI, mapped onto process exit codes:
/// 2 config/validation, 3 data, 4 runtime divergence.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Core(e) => match e {
                CoreError::Config(_)
                | CoreError::Size(_)
                | CoreError::State(_)
                | CoreError::Length(_) => 2,
                CoreError::Vocab(_) | CoreError::Data(_) | CoreError::Degenerate(_) => 3,
                CoreError::Divergence(_) => 4,
            },
        }
    }
}
