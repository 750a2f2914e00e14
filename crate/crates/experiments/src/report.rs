//! Shared experiment configuration and report envelope.

use serde::{Deserialize, Serialize};

use qstar_core::error::{Error, Result};
use qstar_core::mitigation::RemMode;

/// Mitigation settings block shared by every experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    /// Readout error mitigation on/off.
    #[serde(default)]
    pub rem: bool,
    /// Correlated or local calibration.
    #[serde(default = "default_rem_mode")]
    pub rem_mode: RemMode,
    /// Shots per basis state during calibration.
    #[serde(default = "default_rem_shots")]
    pub rem_shots_per_state: u64,
    /// Number of randomized compilations (0 disables RC).
    #[serde(default)]
    pub rc: usize,
    /// Zero-noise-extrapolation fold scales (empty disables ZNE).
    #[serde(default)]
    pub zne: Vec<u64>,
    /// Bootstrap resamples for error bars.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_rem_mode() -> RemMode {
    RemMode::Correlated
}

fn default_rem_shots() -> u64 {
    10_000
}

fn default_bootstrap() -> usize {
    1000
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            rem: false,
            rem_mode: RemMode::Correlated,
            rem_shots_per_state: 10_000,
            rc: 0,
            zne: Vec::new(),
            bootstrap: 1000,
        }
    }
}

impl MitigationConfig {
    pub fn rem_only(mode: RemMode) -> Self {
        MitigationConfig {
            rem: true,
            rem_mode: mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bootstrap < 100 {
            return Err(Error::InvalidArgument(
                "bootstrap resamples must be at least 100".to_string(),
            ));
        }
        for &s in &self.zne {
            if s % 2 == 0 {
                return Err(Error::InvalidArgument(format!(
                    "ZNE fold scales must be odd, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Serializable record of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport<T> {
    pub experiment: String,
    pub tool_version: String,
    pub backend: String,
    pub seed: u64,
    pub shots: u64,
    pub mitigation: MitigationConfig,
    /// Wall-clock of the run in seconds (excluded from determinism checks).
    pub wall_clock_seconds: f64,
    pub results: T,
}


impl<T: Serialize> ExperimentReport<T> {
    pub fn new(
        experiment: &str,
        backend_label: String,
        seed: u64,
        shots: u64,
        mitigation: MitigationConfig,
        wall_clock_seconds: f64,
        results: T,
    ) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            backend: backend_label,
            seed,
            shots,
            mitigation,
            wall_clock_seconds,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
