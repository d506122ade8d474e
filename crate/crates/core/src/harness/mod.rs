//! Orchestration behind the `rtsync` command line: one-shot transforms,
//! consistency checks, scenario runs with managers, and the
//! incrementality benchmark.
//!
//! Exit codes: 0 success, 2 validation error, 3 parse error, 4 scenario
//! fault.

pub mod bench;
pub mod files;
pub mod run;

use thiserror::Error;

pub use bench::{bench, chain_source, BenchRow, BenchTable};
pub use files::{check_session, transform, SessionFile, TransformArgs, TransformOutcome};
pub use run::{
    run_scenario, AdaptationRecord, Counters, ManagerSpec, ManagersFile, Run, RunOptions, RunReport, StepRecord,
    TriggerRecord,
};

use crate::model::ModelError;
use crate::runtime::{RuntimeError, Scenario};
use crate::tgg::SyncError;
use crate::views::AdaptError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("scenario fault at step {step}: {message}")]
    Scenario { step: usize, message: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Parse(_) => 3,
            HarnessError::Scenario { .. } => 4,
        }
    }
}

impl From<SyncError> for HarnessError {
    fn from(e: SyncError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

impl From<AdaptError> for HarnessError {
    fn from(e: AdaptError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

/// Reads and checks a scenario file; forward references are scenario
/// faults naming the step.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| match e {
        RuntimeError::Parse(e) => HarnessError::Parse(format!("{}: {e}", path.display())),
        RuntimeError::Load { step, message } | RuntimeError::Fault { step, message } => {
            HarnessError::Scenario { step, message }
        }
        e => HarnessError::Validation(e.to_string()),
    })
}
