//! Experiment configuration files and the backend/mitigation plumbing
//! shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qstar_core::backend::Backend;
use qstar_core::noise::NoiseProfile;
use qstar_experiments::report::MitigationConfig;

/// Config-file schema. Unknown keys are rejected; command-line flags
/// override any value present here.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment id; must match the subcommand when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// "noiseless" or a path to a noise-profile JSON file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigationConfig>,
    /// Experiment-specific parameters (validated by each subcommand).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug)]
pub enum CliError {
    /// Configuration/validation problem: exit code 2.
    Config(String),
    /// Execution failure: exit code 1.
    Run(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Run(msg) => write!(f, "execution error: {msg}"),
        }
    }
}

impl From<qstar_core::error::Error> for CliError {
    fn from(e: qstar_core::error::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

/// Resolve the backend from an optional profile path / "noiseless" marker.
pub fn resolve_backend(spec: Option<&str>) -> Result<Backend, CliError> {
    match spec {
        None => Ok(Backend::Ideal),
        Some("noiseless") => Ok(Backend::Ideal),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read profile {path}: {e}")))?;
            let profile = NoiseProfile::from_json(&text)
                .map_err(|e| CliError::Config(format!("invalid profile {path}: {e}")))?;
            Ok(Backend::Noisy(profile))
        }
    }
}

/// Default output directory: `$QSTAR_OUT_DIR` or the working directory.
pub fn output_path(explicit: Option<&Path>, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = std::env::var("QSTAR_OUT_DIR").unwrap_or_else(|_| ".".to_string());
            Path::new(&dir).join(default_name)
        }
    }
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Run(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}
