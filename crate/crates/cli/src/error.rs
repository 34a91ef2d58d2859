use std::fmt;
use std::io;
use std::path::Path;

use hwfuzz_core::rtl::{ParseError, SpecError};
use hwfuzz_core::sim::ElaborationError;
use hwfuzz_fuzz::report::{MergeError, ReportError};
use hwfuzz_fuzz::triage::MetaError;
use hwfuzz_fuzz::{CampaignError, ConfigError, GenError};

/// A failure reported as `error[<category>]: <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

impl CliError {
    pub fn new(category: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            category: category.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::new("io", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::new(e.kind.as_str(), e.to_string())
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::new(e.kind.as_str(), e.message)
    }
}

impl From<ElaborationError> for CliError {
    fn from(e: ElaborationError) -> Self {
        CliError::new(e.kind.as_str(), e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(e.kind.as_str(), e.message)
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(c) => c.into(),
            other => CliError::new(other.category(), other.to_string()),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

impl From<MergeError> for CliError {
    fn from(e: MergeError) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        let category = match e {
            ReportError::Io(_) => "io",
            _ => "malformed-stats",
        };
        CliError::new(category, e.to_string())
    }
}

impl From<MetaError> for CliError {
    fn from(e: MetaError) -> Self {
        CliError::new("malformed-crash", e.to_string())
    }
}
