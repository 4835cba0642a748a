//! Command-line analysis pipeline and session collector for eye-strain
//! studies.

pub mod analyze;
pub mod collector;
pub mod design;
pub mod output;

use std::fmt;

/// Seed used for k-means when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_210_304;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Ok = 0,
    /// Input parsed but failed schema or invariant checks.
    Invalid = 1,
    Usage = 2,
    /// Unreadable, unwritable or truncated files.
    Io = 3,
}

/// A command failure carrying its exit class.
#[derive(Debug)]
pub struct Failure {
    pub class: ExitClass,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { class: ExitClass::Invalid, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { class: ExitClass::Usage, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { class: ExitClass::Io, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}
