//! Scenarios, closed-loop runs, metrics, CSV output and the oracle suite.

mod config;
mod csv;
mod metrics;
mod run;
mod scenario;
mod trajectory;
mod verify;

use thiserror::Error;

use crate::adapt::AdaptError;
use crate::control::ControlError;
use crate::dynamics::DynamicsError;
use crate::sliding::SlidingError;

pub use config::{apply_config, parse_config, scenario_from_config, ConfigError, ConfigMap};
pub use csv::{emit_csv, emit_metrics_csv, write_csv, write_metrics_csv, METRICS_HEADER, RUNLOG_HEADER};
pub use metrics::{compute_metrics, detect_manifold_switch, unwinding_ratio, Metrics};
pub use run::{adaptive_lyapunov, run_scenario, size_robust_gains, Row, RunLog, StepSummary, MAX_LOG_INTERVALS};
pub use scenario::{draw_inertia, preset, ControllerKind, GainMode, Scenario, MAX_STEPS, PRESETS};
pub use trajectory::Trajectory;
pub use verify::{verify, verify_with, CheckResult, VerifyOptions, VerifyReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("divergence at step {step}: {source}")]
    Divergence { step: usize, source: DynamicsError },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Sliding(#[from] SlidingError),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
    #[error("invalid gains: {0}")]
    Gains(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ControlError> for SimError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::InvalidGains(m) => SimError::Gains(m),
            ControlError::Sliding(s) => SimError::Sliding(s),
            ControlError::Adapt(a) => SimError::Adapt(a),
        }
    }
}
