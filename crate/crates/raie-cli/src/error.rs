//! Exit-code policy: bad flags or config contents exit 2, missing or
//! broken inputs (and any failure while running) exit 1.

use raie_core::{
    ConfigError, ExperimentError, ModelError, PipelineError, SimError, SnapshotError,
};

#[derive(Debug)]
pub enum CliError {
    /// Flag or config-schema problem: exit 2.
    Usage(String),
    /// Missing state/data or a runtime failure: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Runtime(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            // A config file that cannot be read is missing data, not a
            // schema violation.
            ConfigError::Unreadable(_) => Self::Runtime(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnknownFormat(_) | PipelineError::InvalidQuantiles { .. } => {
                Self::Usage(e.to_string())
            }
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(_) | ExperimentError::UnknownArm(_) => {
                Self::Usage(e.to_string())
            }
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario(_) => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Runtime(e.to_string())
    }
}
